#ifndef OOBSIM_WIRE_HPP
#define OOBSIM_WIRE_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "oobsim/bitstring.hpp"
#include "oobsim/common.hpp"
#include "oobsim/crypto.hpp"

namespace oobsim {

/// One wireless-channel message. Payload shape is fixed by the round:
///   round 1: node -> sink, (pk_A, c_A)
///   round 2: sink -> node, (pk_B, R_B)
///   round 3: node -> sink, (d_A = nonce + salt)
///
/// Byte layout (all integers little-endian):
///   'W'  u32 session_id  u8 round  then length-prefixed fields in round
///   order; a BitString field is u32 bit_length + MSB-first packed bytes.
struct WirelessMessage {
    std::uint32_t session_id = 0;
    std::uint8_t round = 0;
    Bytes pk;          // rounds 1 and 2
    Bytes commitment;  // round 1
    BitString nonce;   // round 2: R_B, round 3: decommit nonce
    Bytes salt;        // round 3

    Bytes serialize() const {
        Bytes out;
        out.push_back('W');
        append_u32_le(session_id, out);
        out.push_back(round);
        auto put_bytes = [&out](const Bytes& field) {
            append_u32_le(static_cast<std::uint32_t>(field.size()), out);
            out.insert(out.end(), field.begin(), field.end());
        };
        auto put_bits = [&out, &put_bytes](const BitString& field) {
            Bytes enc;
            append_u32_le(static_cast<std::uint32_t>(field.size()), enc);
            Bytes packed = field.to_bytes();
            enc.insert(enc.end(), packed.begin(), packed.end());
            put_bytes(enc);
        };
        switch (round) {
            case 1:
                put_bytes(pk);
                put_bytes(commitment);
                break;
            case 2:
                put_bytes(pk);
                put_bits(nonce);
                break;
            case 3:
                put_bits(nonce);
                put_bytes(salt);
                break;
            default:
                throw MalformedMessageError("serialize: unknown round");
        }
        return out;
    }

    static WirelessMessage parse(const Bytes& raw) {
        std::size_t pos = 0;
        auto need = [&](std::size_t n) {
            if (pos + n > raw.size()) throw MalformedMessageError("parse: truncated message");
        };
        auto get_u32 = [&]() {
            need(4);
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(raw[pos++]) << (8 * i);
            return v;
        };
        auto get_bytes = [&]() {
            std::uint32_t len = get_u32();
            need(len);
            Bytes field(raw.begin() + static_cast<long>(pos),
                        raw.begin() + static_cast<long>(pos + len));
            pos += len;
            return field;
        };
        need(1);
        if (raw[pos++] != 'W') throw MalformedMessageError("parse: bad tag");
        WirelessMessage msg;
        msg.session_id = get_u32();
        need(1);
        msg.round = raw[pos++];
        auto get_bits = [&]() {
            Bytes enc = get_bytes();
            if (enc.size() < 4) throw MalformedMessageError("parse: truncated bit field");
            std::uint32_t bits = 0;
            for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(enc[i]) << (8 * i);
            Bytes packed(enc.begin() + 4, enc.end());
            return BitString::from_bytes(packed, bits);
        };
        switch (msg.round) {
            case 1:
                msg.pk = get_bytes();
                msg.commitment = get_bytes();
                break;
            case 2:
                msg.pk = get_bytes();
                msg.nonce = get_bits();
                break;
            case 3:
                msg.nonce = get_bits();
                msg.salt = get_bytes();
                break;
            default:
                throw MalformedMessageError("parse: unknown round");
        }
        if (pos != raw.size()) throw MalformedMessageError("parse: trailing bytes");
        return msg;
    }
};

enum class TranscriptEvent : std::uint8_t { Send = 0, Deliver = 1, Drop = 2 };
enum class Direction : std::uint8_t { NodeToSink = 0, SinkToNode = 1 };

/// Channel log entry; `payload` is the serialized message as sent/received.
struct TranscriptRecord {
    TranscriptEvent event;
    Direction direction;
    TimeMs time_ms;
    Bytes payload;
};

// Transcript file: "OOBT" u8 version, then records of
// u8 event, u8 direction, u64 time_ms, u32 length, payload.
inline void write_transcript(const std::string& path, const std::vector<TranscriptRecord>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write transcript: " + path);
    Bytes buf = {'O', 'O', 'B', 'T', 1};
    for (const auto& rec : log) {
        buf.push_back(static_cast<std::uint8_t>(rec.event));
        buf.push_back(static_cast<std::uint8_t>(rec.direction));
        append_u64_le(rec.time_ms, buf);
        append_u32_le(static_cast<std::uint32_t>(rec.payload.size()), buf);
        buf.insert(buf.end(), rec.payload.begin(), rec.payload.end());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<long>(buf.size()));
}

inline std::vector<TranscriptRecord> read_transcript(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read transcript: " + path);
    Bytes raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < 5 || raw[0] != 'O' || raw[1] != 'O' || raw[2] != 'B' || raw[3] != 'T' ||
        raw[4] != 1)
        throw IoError("bad transcript header");
    std::vector<TranscriptRecord> log;
    std::size_t pos = 5;
    while (pos < raw.size()) {
        if (pos + 14 > raw.size()) throw IoError("truncated transcript record");
        TranscriptRecord rec;
        rec.event = static_cast<TranscriptEvent>(raw[pos++]);
        rec.direction = static_cast<Direction>(raw[pos++]);
        rec.time_ms = 0;
        for (int i = 0; i < 8; ++i) rec.time_ms |= static_cast<TimeMs>(raw[pos++]) << (8 * i);
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(raw[pos++]) << (8 * i);
        if (pos + len > raw.size()) throw IoError("truncated transcript payload");
        rec.payload.assign(raw.begin() + static_cast<long>(pos),
                           raw.begin() + static_cast<long>(pos + len));
        pos += len;
        log.push_back(std::move(rec));
    }
    return log;
}

}  // namespace oobsim

#endif  // OOBSIM_WIRE_HPP
