"""Viscoelastic rate-type fluids: constitutive models, assumption audits and decay verification."""

__version__ = "0.1.0"
