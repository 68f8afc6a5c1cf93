#include "idqn/session/server.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "idqn/errors.hpp"

namespace idqn::session {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Client : public std::enable_shared_from_this<Client> {
 public:
  using Remove = std::function<void(const std::shared_ptr<Client>&)>;

  Client(tcp::socket socket, const TelemetryServer::Handler& handler, std::size_t buffer,
         std::atomic<std::uint64_t>& dropped, Remove remove)
      : ws_(std::move(socket)),
        handler_(handler),
        buffer_(buffer),
        dropped_(dropped),
        remove_(std::move(remove)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->read();
    });
  }

  // Called on the I/O thread.
  void enqueue(std::shared_ptr<const std::string> message) {
    if (closed_) return;
    // The front entry may be in flight; only later entries are droppable.
    const std::size_t droppable_from = writing_ ? 1 : 0;
    if (pending_.size() >= buffer_ && pending_.size() > droppable_from) {
      pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(droppable_from));
      ++dropped_;
    }
    pending_.push_back(std::move(message));
    if (!writing_) write();
  }

  void shutdown() {
    beast::error_code ec;
    ws_.next_layer().socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const std::string text = beast::buffers_to_string(self->in_.data());
      self->in_.consume(self->in_.size());
      self->enqueue(std::make_shared<const std::string>(self->handler_(text)));
      self->read();
    });
  }

  void write() {
    if (pending_.empty() || closed_) return;
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*pending_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->writing_ = false;
                      if (ec) return self->close();
                      self->pending_.pop_front();
                      self->write();
                    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    pending_.clear();
    remove_(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  const TelemetryServer::Handler& handler_;
  std::size_t buffer_;
  std::atomic<std::uint64_t>& dropped_;
  Remove remove_;
  beast::flat_buffer in_;
  std::deque<std::shared_ptr<const std::string>> pending_;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct TelemetryServer::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  Handler handler;
  std::size_t buffer;
  std::set<std::shared_ptr<Client>> clients;  // I/O thread only
  std::atomic<std::size_t> client_count{0};
  std::atomic<std::uint64_t> dropped{0};
  std::thread thread;
  std::atomic<bool> stopped{false};

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto client = std::make_shared<Client>(
          std::move(socket), handler, buffer, dropped,
          [this](const std::shared_ptr<Client>& c) {
            clients.erase(c);
            client_count = clients.size();
          });
      clients.insert(client);
      client_count = clients.size();
      client->start();
      accept();
    });
  }
};

TelemetryServer::TelemetryServer(std::uint16_t port, Handler handler, std::size_t client_buffer)
    : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  impl_->buffer = std::max<std::size_t>(1, client_buffer);
  beast::error_code ec;
  const tcp::endpoint endpoint(asio::ip::make_address("127.0.0.1"), port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw ConfigError("cannot listen on port " + std::to_string(port) + ": " + ec.message());
  }
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

TelemetryServer::~TelemetryServer() { stop(); }

std::uint16_t TelemetryServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TelemetryServer::broadcast(std::string message) {
  if (impl_->stopped || impl_->client_count == 0) return;
  auto shared = std::make_shared<const std::string>(std::move(message));
  asio::post(impl_->io, [impl = impl_.get(), shared] {
    for (const auto& c : std::vector<std::shared_ptr<Client>>(impl->clients.begin(),
                                                               impl->clients.end())) {
      c->enqueue(shared);
    }
  });
}

std::size_t TelemetryServer::client_count() const { return impl_->client_count; }

std::uint64_t TelemetryServer::dropped() const { return impl_->dropped; }

void TelemetryServer::stop() {
  if (impl_->stopped.exchange(true)) return;
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (const auto& c : std::vector<std::shared_ptr<Client>>(impl->clients.begin(),
                                                               impl->clients.end())) {
      c->shutdown();
    }
  });
  // Let pending handlers finish, then stop the loop.
  asio::post(impl_->io, [impl = impl_.get()] { impl->io.stop(); });
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->clients.clear();
}

}  // namespace idqn::session
