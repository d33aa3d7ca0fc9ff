# Tests for quadcert.conic
