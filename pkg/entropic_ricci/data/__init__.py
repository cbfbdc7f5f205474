"""Chain documents and report writers"""
