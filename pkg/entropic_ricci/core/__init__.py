"""Chains, mapping representations and the report pipeline"""
