#include <boost/asio.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include "omninav/error.hpp"
#include "omninav/gateway.hpp"

namespace omninav {

namespace asio = boost::asio;
using asio::ip::tcp;

std::uint16_t resolve_port(std::optional<int> cli, const char* env_var, std::uint16_t fallback) {
  long value = fallback;
  if (cli && *cli >= 0) {
    value = *cli;
  } else if (const char* env = env_var ? std::getenv(env_var) : nullptr; env && *env) {
    char* end = nullptr;
    value = std::strtol(env, &end, 10);
    if (*end != '\0') throw ParameterError(std::string(env_var) + " is not a port number");
  }
  if (value < 0 || value > 65535) throw ParameterError("port out of range: " + std::to_string(value));
  return static_cast<std::uint16_t>(value);
}

namespace {

class Connection;

}  // namespace

struct ScorerEndpoint::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;

  mutable std::mutex mutex;
  mutable std::condition_variable changed;
  std::map<std::string, std::shared_ptr<Connection>> scorers;
  struct Pending {
    std::promise<std::optional<wire::ScoreResponse>> promise;
    const Connection* connection = nullptr;
  };
  std::map<std::uint64_t, Pending> pending;
  std::uint64_t next_id = 1;
  std::uint16_t port = 0;

  void accept();
  void registered(const std::string& id, const std::shared_ptr<Connection>& c);
  void closed(const Connection* c);
  void resolve(std::uint64_t id, std::optional<wire::ScoreResponse> response);
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, ScorerEndpoint::Impl& owner)
      : socket_(std::move(socket)), owner_(owner) {}

  void start() { read(); }

  void send(std::string payload) {
    queue_.push_back(wire::encode_frame(payload));
    if (queue_.size() == 1) write();
  }

  void close_with(const std::string& code, const std::string& message) {
    closing_ = true;
    send(wire::serialize(wire::ErrorMessage{code, message, std::nullopt}));
  }

  void shutdown() {
    boost::system::error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
    if (!closed_) {
      closed_ = true;
      owner_.closed(this);
    }
  }

 private:
  void read() {
    socket_.async_read_some(asio::buffer(chunk_), [self = shared_from_this()](auto ec, std::size_t n) {
      if (ec) return self->shutdown();
      self->decoder_.feed({self->chunk_.data(), n});
      try {
        while (auto payload = self->decoder_.next()) {
          self->handle(*payload);
          if (self->closing_) return;
        }
      } catch (const ProtocolError& err) {
        return self->close_with("bad_frame", err.what());
      }
      self->read();
    });
  }

  void handle(const std::string& payload) {
    wire::ScorerMessage message;
    try {
      message = wire::parse_scorer_message(payload);
    } catch (const ProtocolError& err) {
      return close_with("bad_frame", err.what());
    }
    if (auto* hello = std::get_if<wire::ScorerHello>(&message)) {
      if (hello->v != wire::kVersion) {
        return close_with("version", "unsupported protocol version " + std::to_string(hello->v));
      }
      if (hello->scorer_id.empty()) return close_with("bad_request", "hello must name a scorer_id");
      id_ = hello->scorer_id;
      send(wire::serialize(wire::ScorerHello{wire::kVersion, ""}));
      owner_.registered(id_, shared_from_this());
      return;
    }
    if (id_.empty()) return close_with("bad_request", "expected hello");
    if (auto* resp = std::get_if<wire::ScoreResponse>(&message)) {
      owner_.resolve(resp->id, *resp);
    } else if (auto* err = std::get_if<wire::ErrorMessage>(&message)) {
      if (err->id) owner_.resolve(*err->id, std::nullopt);
    } else {
      send(wire::serialize(wire::ErrorMessage{"unknown_type", "scorers may only send responses", std::nullopt}));
    }
  }

  void write() {
    asio::async_write(socket_, asio::buffer(queue_.front()), [self = shared_from_this()](auto ec, std::size_t) {
      if (ec) return self->shutdown();
      self->queue_.pop_front();
      if (!self->queue_.empty()) return self->write();
      if (self->closing_) self->shutdown();
    });
  }

  tcp::socket socket_;
  ScorerEndpoint::Impl& owner_;
  std::array<char, 8192> chunk_{};
  wire::FrameDecoder decoder_;
  std::deque<std::string> queue_;
  std::string id_;
  bool closing_ = false;
  bool closed_ = false;
};

}  // namespace

void ScorerEndpoint::Impl::accept() {
  acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    socket.set_option(tcp::no_delay(true));
    std::make_shared<Connection>(std::move(socket), *this)->start();
    accept();
  });
}

void ScorerEndpoint::Impl::registered(const std::string& id, const std::shared_ptr<Connection>& c) {
  std::shared_ptr<Connection> previous;
  {
    std::lock_guard lock(mutex);
    auto& slot = scorers[id];
    previous = std::exchange(slot, c);
  }
  if (previous && previous != c) previous->shutdown();
  changed.notify_all();
}

void ScorerEndpoint::Impl::closed(const Connection* c) {
  std::lock_guard lock(mutex);
  for (auto it = scorers.begin(); it != scorers.end();) {
    it = it->second.get() == c ? scorers.erase(it) : std::next(it);
  }
  for (auto it = pending.begin(); it != pending.end();) {
    if (it->second.connection == c) {
      it->second.promise.set_value(std::nullopt);
      it = pending.erase(it);
    } else {
      ++it;
    }
  }
  changed.notify_all();
}

void ScorerEndpoint::Impl::resolve(std::uint64_t id, std::optional<wire::ScoreResponse> response) {
  std::lock_guard lock(mutex);
  const auto it = pending.find(id);
  if (it == pending.end()) return;  // late reply to a request that already timed out
  it->second.promise.set_value(std::move(response));
  pending.erase(it);
}

ScorerEndpoint::ScorerEndpoint(std::uint16_t port, const std::string& bind_address)
    : impl_(std::make_unique<Impl>()) {
  try {
    const tcp::endpoint ep(asio::ip::make_address(bind_address), port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
    impl_->port = impl_->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& err) {
    throw IoError("scorer endpoint cannot listen on port " + std::to_string(port) + ": " + err.what());
  }
  impl_->accept();
  impl_->thread = std::thread([impl = impl_.get()] { impl->io.run(); });
}

ScorerEndpoint::~ScorerEndpoint() {
  asio::post(impl_->io, [impl = impl_.get()] {
    boost::system::error_code ignored;
    impl->acceptor.close(ignored);
    std::map<std::string, std::shared_ptr<Connection>> open;
    {
      std::lock_guard lock(impl->mutex);
      open = impl->scorers;
    }
    for (auto& [id, c] : open) c->shutdown();
    impl->io.stop();
  });
  impl_->thread.join();
  std::lock_guard lock(impl_->mutex);
  for (auto& [id, p] : impl_->pending) p.promise.set_value(std::nullopt);
  impl_->pending.clear();
}

std::uint16_t ScorerEndpoint::port() const { return impl_->port; }

std::vector<std::string> ScorerEndpoint::scorers() const {
  std::lock_guard lock(impl_->mutex);
  std::vector<std::string> out;
  for (const auto& [id, c] : impl_->scorers) out.push_back(id);
  return out;
}

bool ScorerEndpoint::wait_for_scorer(const std::string& scorer_id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(impl_->mutex);
  return impl_->changed.wait_for(lock, timeout, [&] { return impl_->scorers.count(scorer_id) > 0; });
}

std::optional<wire::ScoreResponse> ScorerEndpoint::request(const std::string& scorer_id,
                                                           wire::ScoreRequest request,
                                                           std::chrono::milliseconds timeout) {
  std::shared_ptr<Connection> connection;
  std::future<std::optional<wire::ScoreResponse>> reply;
  {
    std::lock_guard lock(impl_->mutex);
    const auto it = impl_->scorers.find(scorer_id);
    if (it == impl_->scorers.end()) return std::nullopt;
    connection = it->second;
    request.id = impl_->next_id++;
    auto& p = impl_->pending[request.id];
    p.connection = connection.get();
    reply = p.promise.get_future();
  }
  asio::post(impl_->io, [connection, payload = wire::serialize(request)]() mutable {
    connection->send(std::move(payload));
  });
  if (reply.wait_for(timeout) == std::future_status::ready) return reply.get();
  {
    std::lock_guard lock(impl_->mutex);
    const auto it = impl_->pending.find(request.id);
    if (it != impl_->pending.end()) {
      impl_->pending.erase(it);
      return std::nullopt;
    }
  }
  return reply.get();  // resolved between the timeout and the lock
}

RemoteScorer::RemoteScorer(ScorerEndpoint& endpoint, std::string scorer_id, Scorer* fallback,
                           std::chrono::milliseconds timeout)
    : endpoint_(endpoint), id_(std::move(scorer_id)), fallback_(fallback), timeout_(timeout) {}

RawScores RemoteScorer::score(const std::string& instruction, const SliceObservation& obs) {
  const std::size_t n = obs.slices ? obs.slices->size() : 0;
  const auto response = endpoint_.request(id_, wire::make_score_request(0, instruction, obs), timeout_);
  if (response && response->scores.size() == n &&
      std::all_of(response->scores.begin(), response->scores.end(), [](double v) { return std::isfinite(v); })) {
    ++remote_;
    return {response->scores, false};
  }
  if (!fallback_) throw ScorerError("scorer `" + id_ + "` did not answer in time");
  ++fallback_count_;
  RawScores raw = fallback_->score(instruction, obs);
  raw.stale = true;
  return raw;
}

}  // namespace omninav
