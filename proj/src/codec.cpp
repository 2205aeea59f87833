#include <cmath>
#include <nlohmann/json.hpp>

#include "fed/transport.hpp"

namespace fed {

using nlohmann::json;

std::string to_string(MsgKind k) {
    switch (k) {
    case MsgKind::Hello: return "hello";
    case MsgKind::ModelBroadcast: return "model";
    case MsgKind::Update: return "update";
    case MsgKind::Ack: return "ack";
    case MsgKind::Error: return "error";
    }
    return "hello";
}

MsgKind msg_kind_from_string(const std::string& s) {
    if (s == "hello") return MsgKind::Hello;
    if (s == "model") return MsgKind::ModelBroadcast;
    if (s == "update") return MsgKind::Update;
    if (s == "ack") return MsgKind::Ack;
    if (s == "error") return MsgKind::Error;
    throw UnknownKind("unknown envelope kind: " + s);
}

namespace {

json weights_to_json(const ParameterVector& v) {
    json arr = json::array();
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NonFiniteWeight("cannot encode non-finite weight");
        }
        arr.push_back(x);
    }
    return arr;
}

ParameterVector weights_from_json(const json& arr) {
    if (!arr.is_array()) {
        throw CodecError("weights must be an array");
    }
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& x : arr) {
        if (!x.is_number()) {
            throw CodecError("weight is not a number");
        }
        const double v = x.get<double>();
        if (!std::isfinite(v)) {
            throw NonFiniteWeight("decoded weight is not finite");
        }
        out.push_back(v);
    }
    return ParameterVector(std::move(out));
}

std::uint64_t u64_field(const json& obj, const char* name) {
    if (!obj.contains(name) || !obj[name].is_number_unsigned()) {
        throw CodecError(std::string("missing or invalid unsigned field: ") + name);
    }
    return obj[name].get<std::uint64_t>();
}

std::string string_field(const json& obj, const char* name) {
    if (!obj.contains(name) || !obj[name].is_string()) {
        throw CodecError(std::string("missing or invalid string field: ") + name);
    }
    return obj[name].get<std::string>();
}

} // namespace

std::vector<std::uint8_t> encode(const Envelope& e) {
    json body;
    body["kind"] = to_string(e.kind);
    body["round"] = e.round;
    body["sender"] = e.sender;
    switch (e.kind) {
    case MsgKind::Hello:
    case MsgKind::Ack:
        body["payload"] = nullptr;
        break;
    case MsgKind::ModelBroadcast: {
        const auto* model = std::get_if<GlobalModel>(&e.payload);
        if (!model) throw CodecError("ModelBroadcast envelope must carry a GlobalModel");
        body["payload"] = {{"weights", weights_to_json(model->weights)},
                           {"round", model->round},
                           {"server_id", model->server_id}};
        break;
    }
    case MsgKind::Update: {
        const auto* u = std::get_if<ClientUpdate>(&e.payload);
        if (!u) throw CodecError("Update envelope must carry a ClientUpdate");
        body["payload"] = {{"client_id", u->client_id},
                           {"round", u->round},
                           {"sample_count", u->sample_count},
                           {"weights", weights_to_json(u->weights)},
                           {"pseudo_gradient", weights_to_json(u->pseudo_gradient)}};
        break;
    }
    case MsgKind::Error: {
        const auto* err = std::get_if<ErrorBody>(&e.payload);
        if (!err) throw CodecError("Error envelope must carry an ErrorBody");
        body["payload"] = {{"code", err->code}, {"message", err->message}};
        break;
    }
    }
    const std::string text = body.dump();
    if (text.size() > 0xffffffffull) {
        throw CodecError("payload too large for 32-bit frame length");
    }
    std::vector<std::uint8_t> frame;
    frame.reserve(4 + text.size());
    const auto len = static_cast<std::uint32_t>(text.size());
    frame.push_back(static_cast<std::uint8_t>(len >> 24));
    frame.push_back(static_cast<std::uint8_t>(len >> 16));
    frame.push_back(static_cast<std::uint8_t>(len >> 8));
    frame.push_back(static_cast<std::uint8_t>(len));
    frame.insert(frame.end(), text.begin(), text.end());
    return frame;
}

Envelope decode(std::span<const std::uint8_t> frame) {
    if (frame.size() < 4) {
        throw FrameTooShort("frame shorter than the 4-byte length prefix");
    }
    const std::uint32_t declared = (static_cast<std::uint32_t>(frame[0]) << 24) |
                                   (static_cast<std::uint32_t>(frame[1]) << 16) |
                                   (static_cast<std::uint32_t>(frame[2]) << 8) |
                                   static_cast<std::uint32_t>(frame[3]);
    if (declared != frame.size() - 4) {
        throw LengthMismatch("declared payload length " + std::to_string(declared) +
                             " but frame carries " + std::to_string(frame.size() - 4) + " bytes");
    }
    json body;
    try {
        body = json::parse(frame.begin() + 4, frame.end());
    } catch (const json::exception& ex) {
        throw CodecError(std::string("payload is not valid JSON: ") + ex.what());
    }
    try {
        if (!body.is_object()) {
            throw CodecError("payload must be a JSON object");
        }
        Envelope e;
        e.kind = msg_kind_from_string(string_field(body, "kind"));
        e.round = u64_field(body, "round");
        e.sender = string_field(body, "sender");
        const json& payload = body.contains("payload") ? body["payload"] : json(nullptr);
        switch (e.kind) {
        case MsgKind::Hello:
        case MsgKind::Ack:
            if (!payload.is_null()) {
                throw CodecError("hello/ack payload must be null");
            }
            break;
        case MsgKind::ModelBroadcast: {
            if (!payload.is_object()) throw CodecError("model payload must be an object");
            GlobalModel m;
            m.weights = weights_from_json(payload.contains("weights") ? payload["weights"] : json());
            m.round = u64_field(payload, "round");
            m.server_id = string_field(payload, "server_id");
            e.payload = std::move(m);
            break;
        }
        case MsgKind::Update: {
            if (!payload.is_object()) throw CodecError("update payload must be an object");
            ClientUpdate u;
            u.client_id = string_field(payload, "client_id");
            u.round = u64_field(payload, "round");
            u.sample_count = u64_field(payload, "sample_count");
            u.weights = weights_from_json(payload.contains("weights") ? payload["weights"] : json());
            u.pseudo_gradient = weights_from_json(
                payload.contains("pseudo_gradient") ? payload["pseudo_gradient"] : json());
            u.validate();
            e.payload = std::move(u);
            break;
        }
        case MsgKind::Error: {
            if (!payload.is_object()) throw CodecError("error payload must be an object");
            ErrorBody err;
            if (!payload.contains("code") || !payload["code"].is_number_integer()) {
                throw CodecError("error payload needs an integer code");
            }
            err.code = payload["code"].get<int>();
            err.message = string_field(payload, "message");
            e.payload = std::move(err);
            break;
        }
        }
        return e;
    } catch (const CodecError&) {
        throw;
    } catch (const Error& ex) {
        throw CodecError(std::string("invalid payload: ") + ex.what());
    } catch (const json::exception& ex) {
        throw CodecError(std::string("invalid payload: ") + ex.what());
    }
}

} // namespace fed
