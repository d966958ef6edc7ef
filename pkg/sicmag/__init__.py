"""
SiC divacancy magnetometry toolkit
Simulation and analysis of PL6 ODMR magnetometry and spin relaxometry
of a 2D van der Waals ferromagnet
"""

__version__ = "1.0.0"
