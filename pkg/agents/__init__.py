"""One-hop nodes, knowledge tables and the feedback protocol"""
