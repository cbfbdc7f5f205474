"""Logarithmic mean, discrete calculus and the transport distance"""
