"""Desk-scale machinery for Ramsey properties of sparse random graphs with
respect to short subdivisions of bounded-degree graphs."""

__version__ = "0.1.0"
