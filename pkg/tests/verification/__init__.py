# Tests for quadcert.verification
