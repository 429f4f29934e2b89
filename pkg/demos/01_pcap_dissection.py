"""Reading captures and dissecting frames.

Writes a tiny two-packet capture, reads it back, and walks the layer
boundaries and flow/session keys the dissector computes.
"""

import struct
import tempfile
from pathlib import Path

from bytecap import PacketRecord, dissect, keys, read_pcap, write_pcap


def tcp_frame(src, dst, sport, dport, payload):
    eth = b"\x02" * 6 + b"\x04" * 6 + struct.pack(">H", 0x0800)
    tcp = struct.pack(">HHIIBBHHH", sport, dport, 1, 1, 5 << 4, 0x18, 65535, 0, 0)
    total = 20 + len(tcp) + len(payload)
    ip = struct.pack(">BBHHHBBH4B4B", 0x45, 0, total, 1, 0x4000, 64, 6, 0,
                     *src, *dst)
    return eth + ip + tcp + payload


out = Path(tempfile.mkdtemp()) / "demo.pcap"
frames = [
    tcp_frame((10, 0, 0, 1), (10, 0, 0, 2), 5000, 80, b"GET / HTTP/1.1"),
    tcp_frame((10, 0, 0, 2), (10, 0, 0, 1), 80, 5000, b"HTTP/1.1 200 OK"),
]
write_pcap(out, [
    PacketRecord(index=i, ts_sec=1_600_000_000 + i, ts_frac=0,
                 cap_len=len(f), orig_len=len(f), data=f)
    for i, f in enumerate(frames)
])
print(f"wrote {out} ({out.stat().st_size} bytes)")

with read_pcap(out) as reader:
    print(f"byte order {reader.meta.byte_order!r}, "
          f"resolution {reader.meta.ts_resolution}, "
          f"snaplen {reader.meta.snaplen}")
    for rec in reader:
        d = dissect(rec)
        flow, session = keys(d)
        print(f"\npacket {rec.index}: {rec.cap_len} bytes")
        print(f"  ethernet ends at {d.eth_end}, ip header {d.ip_start}..{d.ip_end}, "
              f"transport at {d.transport_start}, payload from {d.payload_start}")
        print(f"  flow key   src={flow.src_ip.hex()}:{flow.src_port} -> "
              f"dst={flow.dst_ip.hex()}:{flow.dst_port} proto={flow.proto}")
        print(f"  session key endpoints {session.endpoint_a[0].hex()}:"
              f"{session.endpoint_a[1]} / {session.endpoint_b[0].hex()}:"
              f"{session.endpoint_b[1]}")

print("\nboth directions share one session key, so the two packets above "
      "fall into a single session unit")
