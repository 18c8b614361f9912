"""`python -m stable_hcm`."""

from .cli import main

main()
