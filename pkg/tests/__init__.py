"""Test package for pppconc."""
