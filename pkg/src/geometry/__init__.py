"""
Geometría - Formas, poses, contactos y envolventes convexas
"""
