"""
Almacenamiento - Escenas, planes y exportación de geometría
"""
