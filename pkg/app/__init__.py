# Simulator backend application
