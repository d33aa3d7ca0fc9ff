# Tests for quadcert.relations
