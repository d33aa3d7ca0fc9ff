# Tests for quadcert.workflows
