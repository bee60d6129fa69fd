"""OAPT - Knee Osteoarthritis Progression Toolkit"""
__version__ = "1.0.0"
