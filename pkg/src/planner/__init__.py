"""
Planificador - Escena, evaluación de órdenes y búsqueda exhaustiva
"""
