"""Configuration, errors, logging and provenance tracking"""
