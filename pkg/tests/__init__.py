# Tests for viewpoint-sim
