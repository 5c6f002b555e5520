"""Run and process configuration"""
