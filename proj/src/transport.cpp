#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "promptseg/error.hpp"
#include "promptseg/segmenter.hpp"

#include <httplib.h>

namespace promptseg {

bool read_frame(int fd, std::string& payload, int timeout_ms) {
  auto read_byte = [&](char& c) -> bool {
    if (timeout_ms >= 0) {
      pollfd p{fd, POLLIN, 0};
      const int r = ::poll(&p, 1, timeout_ms);
      if (r == 0) throw TransportError("timed out waiting for reply");
      if (r < 0) throw TransportError(std::string("poll: ") + std::strerror(errno));
    }
    for (;;) {
      const ssize_t n = ::read(fd, &c, 1);
      if (n == 1) return true;
      if (n == 0) return false;
      if (errno != EINTR) throw TransportError(std::string("read: ") + std::strerror(errno));
    }
  };

  std::string header;
  char c;
  for (;;) {
    if (!read_byte(c)) {
      if (header.empty()) return false;
      throw TransportError("stream ended inside a frame header");
    }
    if (c == '\n') break;
    if (c < '0' || c > '9' || header.size() > 12) throw ProtocolError("bad frame header");
    header += c;
  }
  if (header.empty()) throw ProtocolError("empty frame header");
  const std::size_t len = std::stoull(header);
  payload.resize(len);
  std::size_t got = 0;
  while (got < len) {
    if (timeout_ms >= 0) {
      pollfd p{fd, POLLIN, 0};
      const int r = ::poll(&p, 1, timeout_ms);
      if (r == 0) throw TransportError("timed out inside a frame");
      if (r < 0) throw TransportError(std::string("poll: ") + std::strerror(errno));
    }
    const ssize_t n = ::read(fd, payload.data() + got, len - got);
    if (n == 0) throw TransportError("stream ended inside a frame");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("read: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void write_frame(int fd, std::string_view payload) {
  std::string buf = std::to_string(payload.size()) + "\n";
  buf.append(payload);
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::write(fd, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("write: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

namespace {

class StdioTransport final : public Transport {
 public:
  StdioTransport(std::string command, std::chrono::milliseconds timeout)
      : command_(std::move(command)), timeout_(timeout) {
    ::signal(SIGPIPE, SIG_IGN);
  }

  ~StdioTransport() override { stop(); }

  json call(const json& request) override {
    const std::string body = request.dump();
    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
      try {
        if (pid_ <= 0) start();
        write_frame(to_child_, body);
        std::string reply;
        if (!read_frame(from_child_, reply, static_cast<int>(timeout_.count())))
          throw TransportError("segmenter process closed its output");
        return json::parse(reply);
      } catch (const json::parse_error& e) {
        stop();
        throw ProtocolError(std::string("reply is not valid JSON: ") + e.what());
      } catch (const TransportError& e) {
        last_error = e.what();
        stop();
      }
    }
    throw TransportError("stdio segmenter '" + command_ + "' failed after 1 retry: " + last_error);
  }

  std::string describe() const override { return "stdio:" + command_; }

 private:
  void start() {
    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw TransportError("pipe() failed");
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError("fork() failed");
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
    pid_ = pid;
  }

  void stop() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == 0) {
        ::kill(pid_, SIGTERM);
        ::waitpid(pid_, &status, 0);
      }
    }
    pid_ = -1;
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string url, std::chrono::milliseconds timeout) : url_(std::move(url)), client_(url_) {
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client_.set_connection_timeout(secs.count(), usecs.count());
    client_.set_read_timeout(secs.count(), usecs.count());
    client_.set_write_timeout(secs.count(), usecs.count());
  }

  json call(const json& request) override {
    const std::string path = "/" + request.value("op", std::string("segment"));
    const std::string body = request.dump();
    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto res = client_.Post(path, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        // The body may still carry a structured error (e.g. version mismatch).
        auto parsed = json::parse(res->body, nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("error")) return parsed;
        last_error = "HTTP status " + std::to_string(res->status);
        continue;
      }
      auto parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) throw ProtocolError("reply is not valid JSON");
      return parsed;
    }
    throw TransportError("http segmenter " + url_ + path + " failed after 1 retry: " + last_error);
  }

  std::string describe() const override { return url_; }

 private:
  std::string url_;
  httplib::Client client_;
};

}  // namespace

std::unique_ptr<Transport> make_stdio_transport(std::string command, std::chrono::milliseconds timeout) {
  return std::make_unique<StdioTransport>(std::move(command), timeout);
}

std::unique_ptr<Transport> make_http_transport(std::string url, std::chrono::milliseconds timeout) {
  return std::make_unique<HttpTransport>(std::move(url), timeout);
}

}  // namespace promptseg
