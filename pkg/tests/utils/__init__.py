# Tests for quadcert.utils
