# Pydantic models package
