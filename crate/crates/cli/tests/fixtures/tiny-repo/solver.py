# Runge-Kutta integration step.
def step(y, h):
    s = "# not a comment"
    return y + h  # first order only, the result is not correct for stiff systems

# hack: copy-pasted from the old module
