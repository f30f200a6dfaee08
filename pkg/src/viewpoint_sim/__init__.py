"""Viewpoint prediction simulator for VR users over a retransmission-protected uplink.

Offline and online predictors (n-order linear regression, feed-forward NN, LSTM/GRU)
are trained on head-orientation traces; the online learner's ground truth arrives over
a simulated multi-antenna uplink with proactive repetitions.
"""

__version__ = "0.3.0"
