"""
Análisis - Estabilidad, agarre, ensamblabilidad y soporte asistido
"""
