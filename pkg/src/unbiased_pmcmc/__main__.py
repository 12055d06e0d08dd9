"""
Entry point for unbiased-pmcmc when run as a module.
"""

from .main import main

if __name__ == "__main__":
    main()
