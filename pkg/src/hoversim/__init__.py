"""Desk-scale simulation of a person-following display drone.

Subsystems: pose geometry from body landmarks, tracked detection at the
camera rate, PID following control, the Home/Idle/Await behavior machine,
spring-mass display stabilization, tonal noise cancellation, a blocking
movement API, and a deterministic world loop with scenario files,
telemetry, sweeps, and a live WebSocket server.
"""

__version__ = "0.1.0"
