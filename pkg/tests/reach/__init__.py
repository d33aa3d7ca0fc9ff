# Tests for quadcert.reach
