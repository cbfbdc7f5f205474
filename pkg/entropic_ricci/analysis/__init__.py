"""Heat semigroup, samplers and functional inequalities"""
