"""Gray-box identification of slider-crank dynamics.

A differentiable rigid-body model of a slider-crank mechanism is combined
with a small feed-forward network that absorbs the unmodelled load force at
the slider.  Physical parameters and network weights are fitted jointly from
(angle, angular velocity, torque) records by gradient descent on a windowed
multi-step prediction error.
"""

__version__ = "0.1.0"
