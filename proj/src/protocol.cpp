#include "omninav/protocol.hpp"

#include <openssl/evp.h>

#include <array>

#include "omninav/error.hpp"
#include "omninav/image.hpp"

namespace omninav::wire {

namespace {

using nlohmann::json;

json pose_json(const Pose& p) { return {{"x", p.x}, {"y", p.y}, {"yaw", p.yaw}}; }

Pose read_pose(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("yaw").get<double>()};
}

json visibility_json(const VisibilitySummary& v) {
  json slices = json::array();
  for (const auto& s : v.slices) {
    json entities = json::array();
    for (const auto& e : s.entities) {
      entities.push_back({{"label", e.label}, {"apparent_size", e.apparent_size}, {"distance", e.distance}});
    }
    json regions = json::array();
    for (const auto& r : s.regions) regions.push_back({{"region", r.region}, {"fraction", r.fraction}});
    slices.push_back({{"entities", entities}, {"regions", regions}});
  }
  return {{"slices", slices}};
}

VisibilitySummary read_visibility(const json& j) {
  VisibilitySummary v;
  for (const auto& s : j.at("slices")) {
    SliceVisibility sv;
    for (const auto& e : s.value("entities", json::array())) {
      sv.entities.push_back({e.at("label").get<std::string>(), e.at("apparent_size").get<double>(),
                             e.value("distance", 0.0)});
    }
    for (const auto& r : s.value("regions", json::array())) {
      sv.regions.push_back({r.at("region").get<std::string>(), r.at("fraction").get<double>()});
    }
    v.slices.push_back(std::move(sv));
  }
  return v;
}

CommandKind parse_command_kind(const std::string& name) {
  if (name == "set_instruction") return CommandKind::kSetInstruction;
  if (name == "pause") return CommandKind::kPause;
  if (name == "resume") return CommandKind::kResume;
  if (name == "reset") return CommandKind::kReset;
  if (name == "set_strategy") return CommandKind::kSetStrategy;
  throw ProtocolError("unknown command `" + name + "`");
}

json error_json(const ErrorMessage& m) {
  json j = {{"type", "error"}, {"code", m.code}, {"message", m.message}};
  if (m.id) j["id"] = *m.id;
  return j;
}

ErrorMessage read_error(const json& j) {
  ErrorMessage m;
  m.code = j.value("code", "");
  m.message = j.value("message", "");
  if (j.contains("id")) m.id = j["id"].get<std::uint64_t>();
  return m;
}

json to_json(const ScorerMessage& message) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ScorerHello>) {
          json j = {{"type", "hello"}, {"v", m.v}};
          if (!m.scorer_id.empty()) j["scorer_id"] = m.scorer_id;
          return j;
        } else if constexpr (std::is_same_v<T, ScoreRequest>) {
          json j = {{"type", "score_req"}, {"id", m.id}, {"instruction", m.instruction},
                    {"n_split", m.n_split}, {"kind", m.kind}};
          if (m.kind == "pixels") {
            j["slices"] = m.slices;
            j["panorama"] = m.panorama;
            json ranges = json::array();
            for (const auto& r : m.ranges) ranges.push_back({r.first_column, r.width});
            j["ranges"] = ranges;
          } else {
            j["visibility"] = visibility_json(m.visibility);
          }
          return j;
        } else if constexpr (std::is_same_v<T, ScoreResponse>) {
          return {{"type", "score_resp"}, {"id", m.id}, {"scores", m.scores},
                  {"scorer_id", m.scorer_id}, {"latency_ms", m.latency_ms}};
        } else {
          return error_json(m);
        }
      },
      message);
}

json to_json(const SessionMessage& message) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SessionHello>) {
          return {{"type", "hello"}, {"v", m.v}, {"world", m.world}, {"n_split", m.n_split},
                  {"instruction", m.instruction}, {"strategy", m.strategy}, {"origin", pose_json(m.origin)}};
        } else if constexpr (std::is_same_v<T, Snapshot>) {
          json scorers = json::array();
          for (const auto& s : m.scorers) scorers.push_back({{"id", s.id}, {"a", s.a}, {"stale", s.stale}});
          json contributors = json::array();
          for (const auto& c : m.contributors) contributors.push_back({{"slice", c.slice}, {"weight", c.weight}});
          return {{"type", "snapshot"}, {"t", m.t}, {"pose", pose_json(m.pose)}, {"e", m.e},
                  {"scorers", scorers}, {"theta", m.theta}, {"linear", m.linear}, {"rotate", m.rotate},
                  {"gated", m.gated}, {"collision", m.collision}, {"paused", m.paused},
                  {"contributors", contributors}, {"instruction", m.instruction}, {"strategy", m.strategy}};
        } else if constexpr (std::is_same_v<T, Command>) {
          json j = {{"type", "command"}, {"id", m.id}, {"command", to_string(m.kind)}};
          if (m.kind == CommandKind::kSetInstruction) j["text"] = m.text;
          if (m.kind == CommandKind::kSetStrategy) j["strategy"] = m.strategy;
          return j;
        } else if constexpr (std::is_same_v<T, Ack>) {
          json j = {{"type", "ack"}, {"id", m.id}, {"command", to_string(m.command)}, {"ok", m.ok}};
          if (!m.message.empty()) j["message"] = m.message;
          return j;
        } else {
          return error_json(m);
        }
      },
      message);
}

json parse_object(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("message is not valid JSON");
  if (!j.is_object()) throw ProtocolError("message is not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("message has no type");
  return j;
}

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& err) {
    throw ProtocolError(std::string("malformed message: ") + err.what());
  }
}

}  // namespace

std::string to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::kSetInstruction: return "set_instruction";
    case CommandKind::kPause: return "pause";
    case CommandKind::kResume: return "resume";
    case CommandKind::kReset: return "reset";
    case CommandKind::kSetStrategy: return "set_strategy";
  }
  return "unknown";
}

std::string serialize(const ScorerMessage& message) { return dump(to_json(message)); }
std::string serialize(const SessionMessage& message) { return dump(to_json(message)); }
std::string serialize(const ErrorMessage& message) { return dump(error_json(message)); }

ScorerMessage parse_scorer_message(std::string_view text) {
  const json j = parse_object(text);
  const std::string type = j["type"];
  return guarded([&]() -> ScorerMessage {
    if (type == "hello") return ScorerHello{j.at("v").get<int>(), j.value("scorer_id", "")};
    if (type == "score_req") {
      ScoreRequest r;
      r.id = j.at("id").get<std::uint64_t>();
      r.instruction = j.at("instruction").get<std::string>();
      r.n_split = j.at("n_split").get<int>();
      r.kind = j.value("kind", "visibility");
      if (r.kind == "pixels") {
        r.slices = j.at("slices").get<std::vector<std::string>>();
        r.panorama = j.value("panorama", "");
        for (const auto& range : j.value("ranges", json::array())) {
          r.ranges.push_back({range.at(0).get<int>(), range.at(1).get<int>()});
        }
      } else if (r.kind == "visibility") {
        r.visibility = read_visibility(j.at("visibility"));
      } else {
        throw ProtocolError("unknown payload kind `" + r.kind + "`");
      }
      return r;
    }
    if (type == "score_resp") {
      return ScoreResponse{j.at("id").get<std::uint64_t>(), j.at("scores").get<std::vector<double>>(),
                           j.value("scorer_id", ""), j.value("latency_ms", 0.0)};
    }
    if (type == "error") return read_error(j);
    throw ProtocolError("unknown message type `" + type + "`");
  });
}

SessionMessage parse_session_message(std::string_view text) {
  const json j = parse_object(text);
  const std::string type = j["type"];
  return guarded([&]() -> SessionMessage {
    if (type == "hello") {
      SessionHello h;
      h.v = j.at("v").get<int>();
      h.world = j.value("world", json());
      h.n_split = j.value("n_split", 0);
      h.instruction = j.value("instruction", "");
      h.strategy = j.value("strategy", "");
      if (j.contains("origin")) h.origin = read_pose(j["origin"]);
      return h;
    }
    if (type == "snapshot") {
      Snapshot s;
      s.t = j.at("t").get<double>();
      s.pose = read_pose(j.at("pose"));
      s.e = j.at("e").get<std::vector<double>>();
      for (const auto& sc : j.value("scorers", json::array())) {
        s.scorers.push_back({sc.at("id").get<std::string>(), sc.at("a").get<std::vector<double>>(),
                             sc.value("stale", false)});
      }
      s.theta = j.value("theta", 0.0);
      s.linear = j.value("linear", 0.0);
      s.rotate = j.value("rotate", 0.0);
      s.gated = j.value("gated", false);
      s.collision = j.value("collision", false);
      s.paused = j.value("paused", false);
      for (const auto& c : j.value("contributors", json::array())) {
        s.contributors.push_back({c.at("slice").get<int>(), c.at("weight").get<double>()});
      }
      s.instruction = j.value("instruction", "");
      s.strategy = j.value("strategy", "");
      return s;
    }
    if (type == "command") {
      Command c;
      c.id = j.at("id").get<std::uint64_t>();
      c.kind = parse_command_kind(j.at("command").get<std::string>());
      if (c.kind == CommandKind::kSetInstruction) c.text = j.at("text").get<std::string>();
      if (c.kind == CommandKind::kSetStrategy) c.strategy = j.at("strategy").get<std::string>();
      return c;
    }
    if (type == "ack") {
      return Ack{j.at("id").get<std::uint64_t>(), parse_command_kind(j.at("command").get<std::string>()),
                 j.value("ok", true), j.value("message", "")};
    }
    if (type == "error") return read_error(j);
    throw ProtocolError("unknown message type `" + type + "`");
  });
}

std::string encode_frame(std::string_view payload) {
  if (payload.size() > 0xffffffffu) throw ProtocolError("frame too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(payload);
  return out;
}

void FrameDecoder::feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<std::string> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::size_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(buffer_[static_cast<std::size_t>(i)]);
  if (n > max_frame_) throw ProtocolError("frame of " + std::to_string(n) + " bytes exceeds the limit");
  if (buffer_.size() < 4 + n) return std::nullopt;
  std::string payload = buffer_.substr(4, n);
  buffer_.erase(0, 4 + n);
  return payload;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("invalid base64 payload");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

ScoreRequest make_score_request(std::uint64_t id, const std::string& instruction,
                                const SliceObservation& obs) {
  if (!obs.slices) throw ScorerError("observation has no slices");
  ScoreRequest r;
  r.id = id;
  r.instruction = instruction;
  r.n_split = static_cast<int>(obs.slices->size());
  if (obs.visibility) {
    r.kind = "visibility";
    r.visibility = *obs.visibility;
    return r;
  }
  if (!obs.panorama) throw ScorerError("observation has neither visibility nor pixels");
  r.kind = "pixels";
  for (const auto& slice : obs.slices->slices) {
    r.slices.push_back(base64_encode(encode_png(extract_slice(*obs.panorama, slice))));
    r.ranges.push_back({slice.first_column, slice.width});
  }
  r.panorama = base64_encode(encode_png(obs.panorama->pixels()));
  return r;
}

}  // namespace omninav::wire
