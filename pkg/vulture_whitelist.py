_.reconstruct  # unused method (cthermo/operators.py:49)
_.bloch_vector  # unused method (cthermo/states.py:71)
_.with_eigenvectors  # unused method (cthermo/states.py:77)
_.from_bloch  # unused method (cthermo/states.py:105)
_.pure  # unused method (cthermo/states.py:114)
generalized_free_energy  # unused function (cthermo/states.py:207)
frame_transform  # unused function (cthermo/qubit.py:125)
rotating_frame_state  # unused function (cthermo/qubit.py:159)
numeric_optimal_frequency  # unused function (cthermo/qubit.py:211)
lindblad_rhs  # unused function (cthermo/dynamics.py:142)
evolve_unitary  # unused function (cthermo/dynamics.py:148)
decoherence_time_qubit  # unused function (cthermo/dynamics.py:374)
decoherence_time_mismatch  # unused function (cthermo/dynamics.py:386)
work_extraction_time  # unused function (cthermo/dynamics.py:413)
_.entropy_production  # unused property (cthermo/trajectories.py:133)
conditional_probability  # unused function (cthermo/trajectories.py:181)
backward_ensemble  # unused function (cthermo/trajectories.py:369)
skew_information  # unused function (cthermo/response.py:71)
