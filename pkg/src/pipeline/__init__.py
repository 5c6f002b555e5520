"""Sweep orchestration and canned reproductions"""
