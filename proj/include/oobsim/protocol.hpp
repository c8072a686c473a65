#ifndef OOBSIM_PROTOCOL_HPP
#define OOBSIM_PROTOCOL_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "oobsim/crypto.hpp"
#include "oobsim/rng.hpp"
#include "oobsim/wire.hpp"

namespace oobsim {

enum class FailureCause {
    None,
    Timeout,
    CommitmentMismatch,
    WrongLength,
    Malformed,
};

inline const char* failure_cause_name(FailureCause c) {
    switch (c) {
        case FailureCause::None: return "none";
        case FailureCause::Timeout: return "timeout";
        case FailureCause::CommitmentMismatch: return "commitment_mismatch";
        case FailureCause::WrongLength: return "wrong_length";
        case FailureCause::Malformed: return "malformed";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Node (device A) session
// ---------------------------------------------------------------------------

class NodeSession {
public:
    enum class State {
        Idle,
        Committed,
        AwaitingStart,
        SasEmitted,
        AwaitingDecision,
        Accepted,
        Rejected,
        Failed,
    };

    NodeSession(std::uint32_t session_id, std::size_t k, const Bytes& session_seed,
                std::optional<KeyPair> injected_keys = std::nullopt)
        : id_(session_id), k_(k), seed_(session_seed) {
        keys_ = injected_keys ? std::move(*injected_keys)
                              : keygen(derive_bytes(seed_, "node.key", 32));
    }

    /// Round 1: pick R_A, commit to it bound to our public key.
    WirelessMessage round1() {
        require_state(State::Idle, "round1");
        r_a_ = derive_bits(seed_, "node.ra", k_);
        auto [c, d] = commit(keys_.public_key, r_a_, derive_bytes(seed_, "node.salt", 16));
        commitment_ = c;
        decommitment_ = d;
        state_ = State::Committed;
        WirelessMessage msg;
        msg.session_id = id_;
        msg.round = 1;
        msg.pk = keys_.public_key;
        msg.commitment = c.digest;
        return msg;
    }

    /// Round 3: release the decommitment and fix our SAS from the (possibly
    /// tampered) sink values we received.
    WirelessMessage round3(const WirelessMessage& round2_msg) {
        require_state(State::Committed, "round3");
        if (round2_msg.round != 2) throw MalformedMessageError("round3: expected a round-2 message");
        if (round2_msg.nonce.size() != k_)
            throw LengthMismatchError("round3: R_B length != k");
        peer_pk_ = round2_msg.pk;
        sas_ = compute_sas(round2_msg.nonce, r_a_, peer_pk_);
        state_ = State::AwaitingStart;
        WirelessMessage msg;
        msg.session_id = id_;
        msg.round = 3;
        msg.nonce = decommitment_.nonce;
        msg.salt = decommitment_.salt;
        return msg;
    }

    void start_transmission(TimeMs) {
        require_state(State::AwaitingStart, "start_transmission");
        state_ = State::SasEmitted;
    }

    void transmission_done(TimeMs now, TimeMs delta_ms) {
        require_state(State::SasEmitted, "transmission_done");
        deadline_ = now + delta_ms;
        state_ = State::AwaitingDecision;
    }

    /// Administrator decision: turn-off before the deadline rejects, anything
    /// else past the deadline is the default acceptance. On acceptance the
    /// link key wrapping the bootstrap secrets is derived.
    State finalize(bool admin_turnoff, TimeMs now) {
        require_state(State::AwaitingDecision, "finalize");
        if (admin_turnoff && now < deadline_) {
            state_ = State::Rejected;
        } else if (now >= deadline_) {
            link_key_ = derive_link_key(keys_.private_key, peer_pk_);
            state_ = State::Accepted;
        } else {
            throw InvalidStateError("finalize: decision window still open");
        }
        return state_;
    }

    void fail(FailureCause cause) {
        if (state_ == State::Accepted || state_ == State::Rejected) return;
        state_ = State::Failed;
        cause_ = cause;
    }

    State state() const { return state_; }
    FailureCause cause() const { return cause_; }
    std::uint32_t id() const { return id_; }
    std::size_t k() const { return k_; }
    const KeyPair& keys() const { return keys_; }
    const SasValue& sas() const {
        if (state_ == State::Idle || state_ == State::Committed || state_ == State::Failed)
            throw InvalidStateError("sas: not computed yet");
        return sas_;
    }
    const Bytes& peer_public_key() const { return peer_pk_; }
    const Bytes& link_key() const { return link_key_; }
    TimeMs deadline() const { return deadline_; }

private:
    void require_state(State expected, const char* op) const {
        if (state_ != expected)
            throw InvalidStateError(std::string(op) + ": invalid node session state");
    }

    std::uint32_t id_;
    std::size_t k_;
    Bytes seed_;
    KeyPair keys_;
    BitString r_a_;
    Commitment commitment_;
    Decommitment decommitment_;
    Bytes peer_pk_;
    SasValue sas_;
    Bytes link_key_;
    TimeMs deadline_ = 0;
    State state_ = State::Idle;
    FailureCause cause_ = FailureCause::None;
};

// ---------------------------------------------------------------------------
// Sink (device B) session
// ---------------------------------------------------------------------------

enum class MatchStatus { Free, Used, Mismatched };
enum class SyncStatus { Unknown, Ok, Error };

class SinkSession {
public:
    enum class State { Idle, AwaitingDecommit, SasComputed, Failed };

    SinkSession(std::uint32_t session_id, std::size_t k, KeyPair sink_keys,
                const Bytes& session_seed)
        : id_(session_id), k_(k), keys_(std::move(sink_keys)), seed_(session_seed) {}

    /// Round 2: remember the node's (pk_A, c_A), answer with our key and a
    /// fresh R_B.
    WirelessMessage round2(const WirelessMessage& round1_msg) {
        require_state(State::Idle, "round2");
        if (round1_msg.round != 1)
            throw MalformedMessageError("round2: expected a round-1 message");
        if (round1_msg.pk.size() != 32 || round1_msg.commitment.size() != 32)
            throw MalformedMessageError("round2: bad field widths");
        peer_pk_ = round1_msg.pk;
        peer_commitment_ = Commitment{round1_msg.commitment};
        r_b_ = derive_bits(seed_, "sink.rb", k_);
        state_ = State::AwaitingDecommit;
        WirelessMessage msg;
        msg.session_id = id_;
        msg.round = 2;
        msg.pk = keys_.public_key;
        msg.nonce = r_b_;
        return msg;
    }

    /// Round 3 receipt: open the commitment and fix the expected SAS for the
    /// visual channel. A digest mismatch fails the session immediately.
    SasValue receive_decommit(const WirelessMessage& round3_msg) {
        require_state(State::AwaitingDecommit, "receive_decommit");
        if (round3_msg.round != 3)
            throw MalformedMessageError("receive_decommit: expected a round-3 message");
        BitString r_a;
        try {
            r_a = open(peer_pk_, peer_commitment_, Decommitment{round3_msg.nonce, round3_msg.salt});
        } catch (const CommitmentMismatchError&) {
            fail(FailureCause::CommitmentMismatch);
            throw;
        }
        if (r_a.size() != k_) {
            fail(FailureCause::WrongLength);
            throw LengthMismatchError("receive_decommit: committed nonce has wrong length");
        }
        expected_sas_ = compute_sas(r_b_, r_a, keys_.public_key);
        state_ = State::SasComputed;
        return *expected_sas_;
    }

    void fail(FailureCause cause) {
        state_ = State::Failed;
        cause_ = cause;
    }

    Bytes derive_link() const { return derive_link_key(keys_.private_key, peer_pk_); }

    State state() const { return state_; }
    FailureCause cause() const { return cause_; }
    std::uint32_t id() const { return id_; }
    const BitString& r_b() const { return r_b_; }
    const Bytes& peer_public_key() const { return peer_pk_; }
    const std::optional<SasValue>& expected_sas() const { return expected_sas_; }

    MatchStatus match_status = MatchStatus::Free;
    SyncStatus sync_status = SyncStatus::Unknown;

private:
    void require_state(State expected, const char* op) const {
        if (state_ != expected)
            throw InvalidStateError(std::string(op) + ": invalid sink session state");
    }

    std::uint32_t id_;
    std::size_t k_;
    KeyPair keys_;
    Bytes seed_;
    Bytes peer_pk_;
    Commitment peer_commitment_;
    BitString r_b_;
    std::optional<SasValue> expected_sas_;
    State state_ = State::Idle;
    FailureCause cause_ = FailureCause::None;
};

// ---------------------------------------------------------------------------
// Adversary model: full control over the wireless channel, no access to the
// LED frames (the visual channel is authenticated).
// ---------------------------------------------------------------------------

struct AdversaryAction {
    enum class Kind { Pass, Drop, Delay, Replay, Substitute };
    Kind kind = Kind::Pass;
    TimeMs delay_ms = 0;
    std::function<WirelessMessage(const WirelessMessage&)> transform;

    static AdversaryAction pass() { return {}; }
    static AdversaryAction drop() { return {Kind::Drop, 0, nullptr}; }
    static AdversaryAction delay(TimeMs ms) { return {Kind::Delay, ms, nullptr}; }
    static AdversaryAction replay() { return {Kind::Replay, 0, nullptr}; }
    static AdversaryAction substitute(std::function<WirelessMessage(const WirelessMessage&)> fn) {
        return {Kind::Substitute, 0, std::move(fn)};
    }
};

class AdversaryPolicy {
public:
    static AdversaryPolicy pass_through() { return {}; }

    AdversaryPolicy& set(std::uint32_t session_id, int round, AdversaryAction action) {
        actions_[{session_id, round}] = std::move(action);
        return *this;
    }

    const AdversaryAction* find(std::uint32_t session_id, int round) const {
        auto it = actions_.find({session_id, round});
        return it == actions_.end() ? nullptr : &it->second;
    }

    bool empty() const { return actions_.empty(); }

private:
    std::map<std::pair<std::uint32_t, int>, AdversaryAction> actions_;
};

// ---------------------------------------------------------------------------
// Batch runner: n parallel sessions over a virtual clock
// ---------------------------------------------------------------------------

struct ChannelConfig {
    TimeMs transit_ms = 5;
    TimeMs timeout_ms = 2500;  // 10x the default 250 ms hold time
    TimeMs replay_gap_ms = 7;
};

struct BatchKeys {
    KeyPair sink;
    std::vector<KeyPair> nodes;  // may be shorter than n; missing -> derived
};

struct BatchRun {
    std::size_t n = 0;
    std::size_t k = 0;
    TimeMs clock = 0;
    std::vector<NodeSession> nodes;
    std::vector<SinkSession> sinks;
    std::vector<TranscriptRecord> transcript;
    Bytes batch_seed;
};

/// Runs rounds 1-3 for all n sessions under the adversary policy. Per-session
/// failures are recorded on the session and never abort the rest of the batch.
inline BatchRun run_batch(std::size_t n, std::size_t k, const AdversaryPolicy& adversary,
                          std::uint64_t seed, const ChannelConfig& channel = {},
                          const std::optional<BatchKeys>& injected = std::nullopt) {
    if (n < 1) throw ConfigError("run_batch: n must be >= 1");
    if (k < kMinProtocolSasBits || k > kMaxProtocolSasBits)
        throw ConfigError("run_batch: k outside the supported 8..32 range");

    BatchRun run;
    run.n = n;
    run.k = k;
    run.batch_seed = batch_seed_bytes(seed);

    KeyPair sink_keys = (injected && !injected->sink.public_key.empty())
                            ? injected->sink
                            : keygen(derive_bytes(run.batch_seed, "sink.key", 32));

    run.nodes.reserve(n);
    run.sinks.reserve(n);
    for (std::uint32_t sid = 0; sid < n; ++sid) {
        Bytes session_seed = derive_bytes(run.batch_seed, "session." + std::to_string(sid), 32);
        std::optional<KeyPair> node_keys;
        if (injected && sid < injected->nodes.size()) node_keys = injected->nodes[sid];
        run.nodes.emplace_back(sid, k, session_seed, node_keys);
        run.sinks.emplace_back(sid, k, sink_keys, session_seed);
    }

    struct Delivery {
        TimeMs time;
        std::uint64_t seq;
        Direction direction;
        Bytes payload;
        bool operator>(const Delivery& other) const {
            return std::tie(time, seq) > std::tie(other.time, other.seq);
        }
    };
    std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> queue;
    std::uint64_t seq = 0;
    TimeMs last_processed = 0;

    auto send = [&](Direction dir, const WirelessMessage& msg, TimeMs now) {
        Bytes raw = msg.serialize();
        run.transcript.push_back({TranscriptEvent::Send, dir, now, raw});
        const AdversaryAction* action = adversary.find(msg.session_id, msg.round);
        using Kind = AdversaryAction::Kind;
        Kind kind = action ? action->kind : Kind::Pass;
        switch (kind) {
            case Kind::Pass:
                queue.push({now + channel.transit_ms, seq++, dir, raw});
                break;
            case Kind::Drop:
                run.transcript.push_back({TranscriptEvent::Drop, dir, now, raw});
                break;
            case Kind::Delay:
                queue.push({now + channel.transit_ms + action->delay_ms, seq++, dir, raw});
                break;
            case Kind::Replay:
                queue.push({now + channel.transit_ms, seq++, dir, raw});
                queue.push({now + channel.transit_ms + channel.replay_gap_ms, seq++, dir, raw});
                break;
            case Kind::Substitute: {
                Bytes forged = action->transform(msg).serialize();
                queue.push({now + channel.transit_ms, seq++, dir, forged});
                break;
            }
        }
    };

    for (auto& node : run.nodes) send(Direction::NodeToSink, node.round1(), 0);

    while (!queue.empty()) {
        Delivery next = queue.top();
        queue.pop();
        if (next.time > channel.timeout_ms) continue;  // stalls handled below
        last_processed = std::max(last_processed, next.time);
        run.transcript.push_back({TranscriptEvent::Deliver, next.direction, next.time, next.payload});
        WirelessMessage msg;
        try {
            msg = WirelessMessage::parse(next.payload);
        } catch (const MalformedMessageError&) {
            continue;  // unparseable forgery; receiver drops it
        }
        if (msg.session_id >= n) continue;
        NodeSession& node = run.nodes[msg.session_id];
        SinkSession& sink = run.sinks[msg.session_id];
        try {
            if (next.direction == Direction::NodeToSink) {
                if (msg.round == 1) {
                    send(Direction::SinkToNode, sink.round2(msg), next.time);
                } else if (msg.round == 3) {
                    sink.receive_decommit(msg);
                } else {
                    sink.fail(FailureCause::Malformed);
                }
            } else {
                if (msg.round == 2) {
                    send(Direction::NodeToSink, node.round3(msg), next.time);
                } else {
                    node.fail(FailureCause::Malformed);
                }
            }
        } catch (const InvalidStateError&) {
            // duplicate or replayed delivery; a session never advances twice
        } catch (const CommitmentMismatchError&) {
            // receive_decommit already marked the sink session failed
        } catch (const MalformedMessageError&) {
            if (next.direction == Direction::NodeToSink)
                sink.fail(FailureCause::Malformed);
            else
                node.fail(FailureCause::Malformed);
        } catch (const LengthMismatchError&) {
            if (next.direction == Direction::NodeToSink)
                sink.fail(FailureCause::WrongLength);
            else
                node.fail(FailureCause::WrongLength);
        }
    }

    bool timed_out = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (run.nodes[i].state() != NodeSession::State::AwaitingStart &&
            run.nodes[i].state() != NodeSession::State::Failed) {
            run.nodes[i].fail(FailureCause::Timeout);
            timed_out = true;
        }
        if (run.sinks[i].state() != SinkSession::State::SasComputed &&
            run.sinks[i].state() != SinkSession::State::Failed) {
            run.sinks[i].fail(FailureCause::Timeout);
            timed_out = true;
        }
    }
    run.clock = timed_out ? std::max(last_processed, channel.timeout_ms) : last_processed;
    return run;
}

}  // namespace oobsim

#endif  // OOBSIM_PROTOCOL_HPP
