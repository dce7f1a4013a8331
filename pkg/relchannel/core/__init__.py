# Core numerics
