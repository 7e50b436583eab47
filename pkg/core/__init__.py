# Core modules for modulus approximation
