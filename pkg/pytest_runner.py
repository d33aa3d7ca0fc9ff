"""
Pytest runner for the quadcert tests.

Run with: python pytest_runner.py          (skips end-to-end runs marked slow)
     or: python pytest_runner.py --all    (everything)
Or if pytest is installed: pytest tests/
"""

import sys

try:
    import pytest
    PYTEST_AVAILABLE = True
except ImportError:
    PYTEST_AVAILABLE = False


def run_with_pytest(include_slow: bool = False):
    """Run tests using pytest if available."""
    if not PYTEST_AVAILABLE:
        print("❌ pytest not available. Please install it with: pip install pytest")
        return False

    args = ["tests/", "-v", "--tb=short", "--color=yes"]
    if not include_slow:
        args += ["-m", "not slow"]
    exit_code = pytest.main(args)

    return exit_code == 0


if __name__ == "__main__":
    if run_with_pytest(include_slow="--all" in sys.argv[1:]):
        print("🎉 All tests passed!")
    else:
        print("❌ Some tests failed or pytest unavailable")
        sys.exit(1)
