"""
Two buses joined over TCP
=========================

"""

from teleop.bridge import RegistryMismatch, connect_bridge, serve_bridge
from teleop.bus import Bus, TopicRegistry
from teleop.locomotion import GaitEvent

# A hub bus serves its traffic on a socket; a second process connects
# and sees the hub's topics as if they were local. Port 0 lets the OS
# pick, which is also how the tests stay parallel-safe.
hub = Bus()
server = serve_bridge(hub, tcp_port=0, ws_port=None)
print(f"hub serving on tcp port {server.tcp_port}")

remote = Bus()
inbox = remote.subscribe("gait_events", capacity=16)
link = connect_bridge(remote, port=server.tcp_port)

for seq in range(3):
    hub.publish("gait_events", GaitEvent(stamp_us=seq, event="reset"))

for _ in range(3):
    envelope = inbox.get(timeout=2.0)
    print(f"remote got {envelope.kind} stamp={envelope.payload['stamp_us']}")

# Both ends swap topic registries when the link opens. A peer that
# disagrees about what flows on a topic is refused outright; silently
# mis-decoding each other's traffic would be far worse than a failed
# connection.
confused = Bus(TopicRegistry({"gait_events": "gait_event"}))
try:
    connect_bridge(confused, port=server.tcp_port)
except RegistryMismatch as err:
    print(f"mismatched peer refused: {err}")

link.close()
remote.close()
server.close()
hub.close()
