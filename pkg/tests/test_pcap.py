"""Reader, dissector and key tests against hand-written byte fixtures."""

import random
import struct

import pytest

from bytecap.pcap import (
    L3Kind,
    NonIpPacketError,
    PacketRecord,
    PcapFormatError,
    TruncatedCaptureError,
    dissect,
    keys,
    read_pcap,
    read_pcap_records,
    write_pcap,
)
from conftest import arp_frame, ipv4_frame, ipv6_frame


def global_header(magic=0xD4C3B2A1, snaplen=65535, linktype=1, order="<"):
    return struct.pack(">I", magic) + struct.pack(order + "HHiIII", 2, 4, 0, 0,
                                                  snaplen, linktype)


def record(data, ts_sec=1600000000, ts_frac=42, order="<", orig=None):
    orig = len(data) if orig is None else orig
    return struct.pack(order + "IIII", ts_sec, ts_frac, len(data), orig) + data


class TestReader:
    def test_two_handwritten_records(self, tmp_path):
        # Fixture assembled field by field from the classic layout.
        p = tmp_path / "two.pcap"
        body = global_header()
        body += record(b"\x01" * 60)
        body += record(b"\x02" * 74)
        p.write_bytes(body)
        meta, recs = read_pcap_records(p)
        assert [r.cap_len for r in recs] == [60, 74]
        assert [r.index for r in recs] == [0, 1]
        assert [len(r.data) for r in recs] == [60, 74]
        assert recs[0].ts_sec == 1600000000 and recs[0].ts_frac == 42
        assert meta.snaplen == 65535 and meta.link_type == 1

    def test_magic_variants(self, tmp_path):
        cases = [
            (0xA1B2C3D4, ">", "micro"),
            (0xD4C3B2A1, "<", "micro"),
            (0xA1B23C4D, ">", "nano"),
            (0x4D3CB2A1, "<", "nano"),
        ]
        for magic, order, resolution in cases:
            p = tmp_path / f"m{magic:x}.pcap"
            p.write_bytes(global_header(magic, order=order)
                          + record(b"\x00" * 20, order=order))
            with read_pcap(p) as r:
                assert r.meta.byte_order == order
                assert r.meta.ts_resolution == resolution
                assert [rec.cap_len for rec in r] == [20]

    def test_empty_capture(self, tmp_path):
        p = tmp_path / "empty.pcap"
        p.write_bytes(global_header())
        meta, recs = read_pcap_records(p)
        assert recs == []

    def test_bad_magic_names_value(self, tmp_path):
        p = tmp_path / "bad.pcap"
        p.write_bytes(b"\x0a\x0d\x0d\x0a" + b"\x00" * 20)
        with pytest.raises(PcapFormatError, match="0x0A0D0D0A"):
            read_pcap_records(p)

    def test_truncated_record_header(self, tmp_path):
        p = tmp_path / "t1.pcap"
        p.write_bytes(global_header() + record(b"\x00" * 30) + b"\x00\x01\x02")
        with pytest.raises(TruncatedCaptureError) as ei:
            read_pcap_records(p)
        assert ei.value.last_good_index == 0

    def test_truncated_record_body(self, tmp_path):
        p = tmp_path / "t2.pcap"
        hdr = struct.pack("<IIII", 0, 0, 100, 100)
        p.write_bytes(global_header() + record(b"\x00" * 30)
                      + record(b"\x01" * 10) + hdr + b"\xff" * 40)
        with pytest.raises(TruncatedCaptureError) as ei:
            read_pcap_records(p)
        assert ei.value.last_good_index == 1

    def test_corrupt_length_fields(self, tmp_path):
        p = tmp_path / "c.pcap"
        # incl_len exceeding orig_len is nonsense
        hdr = struct.pack("<IIII", 0, 0, 50, 10)
        p.write_bytes(global_header() + hdr + b"\x00" * 50)
        with pytest.raises(PcapFormatError):
            read_pcap_records(p)

    @pytest.mark.parametrize("order", ["<", ">"])
    def test_roundtrip_both_orders(self, tmp_path, order):
        rng = random.Random(99)
        recs = [
            PacketRecord(index=i, ts_sec=rng.randrange(2**31),
                         ts_frac=rng.randrange(10**6),
                         cap_len=n, orig_len=n + rng.randrange(3),
                         data=bytes(rng.randrange(256) for _ in range(n)))
            for i, n in enumerate(rng.randrange(1, 200) for _ in range(25))
        ]
        p = tmp_path / "rt.pcap"
        write_pcap(p, recs, byte_order=order)
        _, back = read_pcap_records(p)
        assert back == recs


def rec_of(data):
    return PacketRecord(index=0, ts_sec=0, ts_frac=0, cap_len=len(data),
                        orig_len=len(data), data=data)


class TestDissect:
    def test_minimal_ipv4_tcp(self):
        d = dissect(rec_of(ipv4_frame()))
        assert (d.eth_end, d.ip_start, d.ip_end) == (14, 14, 34)
        assert (d.transport_start, d.payload_start) == (34, 54)
        assert d.l3_kind is L3Kind.IPV4 and d.proto == 6
        assert d.five_tuple.src_port == 5000 and d.five_tuple.dst_port == 80

    def test_udp_payload_offset(self):
        d = dissect(rec_of(ipv4_frame(proto=17)))
        assert d.payload_start == 14 + 20 + 8 == 42

    def test_one_vlan_tag_shifts_offsets(self):
        d = dissect(rec_of(ipv4_frame(vlan_tags=1)))
        assert d.eth_end == 18
        assert (d.ip_end, d.transport_start, d.payload_start) == (38, 38, 58)

    def test_arp_is_non_ip(self):
        d = dissect(rec_of(arp_frame()))
        assert d.l3_kind is L3Kind.NON_IP
        assert d.ip_start is None and d.five_tuple is None

    def test_ipv6_fixed_header(self):
        d = dissect(rec_of(ipv6_frame(payload=b"hi")))
        assert d.ip_end == 14 + 40
        assert d.payload_start == 14 + 40 + 20
        assert d.l3_kind is L3Kind.IPV6

    def test_ipv6_extension_header_is_payload(self):
        # hop-by-hop (0) is not TCP/UDP, so no transport layer is claimed
        d = dissect(rec_of(ipv6_frame(next_header=0)))
        assert d.transport_start is None
        assert d.five_tuple.src_port == 0 and d.five_tuple.dst_port == 0

    def test_fragment_has_zero_ports_but_keys(self):
        d = dissect(rec_of(ipv4_frame(frag_offset=5)))
        assert d.transport_start is None
        assert d.five_tuple.src_port == 0 and d.five_tuple.dst_port == 0
        flow, session = keys(d)
        assert session.proto == 6

    def test_ihl_options(self):
        d = dissect(rec_of(ipv4_frame(ihl=8)))
        assert d.ip_end == 14 + 32

    def test_tcp_data_offset(self):
        d = dissect(rec_of(ipv4_frame(tcp_doff=8)))
        assert d.payload_start == 34 + 32

    def test_truncated_ip_degrades(self):
        frame = ipv4_frame()[:20]  # cuts into the IP header
        d = dissect(rec_of(frame))
        assert d.ip_start is None and d.l3_kind is L3Kind.NON_IP

    def test_truncated_transport_degrades(self):
        frame = ipv4_frame()[:40]  # IP complete, TCP header cut short
        d = dissect(rec_of(frame))
        assert d.ip_end == 34
        assert d.transport_start is None and d.payload_start is None

    def test_runt_frame(self):
        d = dissect(rec_of(b"\x01\x02\x03"))
        assert 0 < d.eth_end <= 3
        assert d.l3_kind is L3Kind.NON_IP

    def test_fuzz_offsets_bounded_and_monotonic(self):
        # Random mutations of well-formed frames must never violate the
        # offset ordering, exceed cap_len, or raise.
        rng = random.Random(7)
        base_frames = [ipv4_frame(payload=b"x" * 30), ipv4_frame(proto=17),
                       ipv6_frame(), arp_frame(), ipv4_frame(vlan_tags=2)]
        for trial in range(2000):
            frame = bytearray(rng.choice(base_frames))
            for _ in range(rng.randrange(1, 8)):
                frame[rng.randrange(len(frame))] = rng.randrange(256)
            if rng.random() < 0.5:
                frame = frame[:rng.randrange(1, len(frame) + 1)]
            d = dissect(rec_of(bytes(frame)))
            n = len(frame)
            assert 0 < d.eth_end <= n
            offsets = [d.eth_end, d.ip_start, d.ip_end, d.transport_start,
                       d.payload_start]
            present = [o for o in offsets if o is not None]
            assert all(a <= b for a, b in zip(present, present[1:]))
            assert all(0 <= o <= n for o in present)
            if d.ip_start is not None:
                assert d.ip_start == d.eth_end
            if d.transport_start is None and d.five_tuple is not None:
                assert d.five_tuple.src_port == 0 and d.five_tuple.dst_port == 0


class TestKeys:
    def test_session_key_direction_invariant(self):
        fwd = dissect(rec_of(ipv4_frame(src=(10, 0, 0, 1), dst=(10, 0, 0, 2),
                                        sport=5000, dport=80)))
        rev = dissect(rec_of(ipv4_frame(src=(10, 0, 0, 2), dst=(10, 0, 0, 1),
                                        sport=80, dport=5000)))
        f1, s1 = keys(fwd)
        f2, s2 = keys(rev)
        assert s1 == s2
        assert f1 != f2

    def test_identical_packets_identical_flow_keys(self):
        a = keys(dissect(rec_of(ipv4_frame())))[0]
        b = keys(dissect(rec_of(ipv4_frame())))[0]
        assert a == b

    def test_non_ip_raises(self):
        with pytest.raises(NonIpPacketError):
            keys(dissect(rec_of(arp_frame())))

    def test_session_key_invariance_random_tuples(self):
        rng = random.Random(3)
        for _ in range(300):
            src = tuple(rng.randrange(256) for _ in range(4))
            dst = tuple(rng.randrange(256) for _ in range(4))
            sport, dport = rng.randrange(65536), rng.randrange(65536)
            proto = rng.choice([6, 17])
            fwd = dissect(rec_of(ipv4_frame(src=src, dst=dst, sport=sport,
                                            dport=dport, proto=proto)))
            rev = dissect(rec_of(ipv4_frame(src=dst, dst=src, sport=dport,
                                            dport=sport, proto=proto)))
            assert keys(fwd)[1] == keys(rev)[1]
