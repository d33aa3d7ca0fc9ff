# Tests for quadcert
