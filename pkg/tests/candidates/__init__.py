# Tests for quadcert.candidates
