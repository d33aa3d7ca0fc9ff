# Tests for quadcert.tighten
