# Tests for quadcert.network
