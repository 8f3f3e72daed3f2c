"""Settings, seed streams, formatting helpers and the exception hierarchy"""
