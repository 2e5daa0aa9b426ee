// Copyright 2026 The tokmarg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// A scripted scorer speaking the line protocol, for tests. Each token of a
// request scores -(0.5 + 0.1 * bytes), or 0 with --zeros. Faults can be injected by response
// number (1-based).

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tokmarg/line_client.h"

namespace {

struct Options {
  int reverse = 1;           // respond to groups of this many in reverse
  int idle_ms = 20;          // flush a partial group after this long idle
  int64_t malformed_at = 0;
  int64_t wrong_length_at = 0;
  int64_t crash_after = 0;
  int64_t stall_after = 0;
  int listen_port = -1;
  bool zeros = false;
};

bool WriteAll(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

class Server {
 public:
  Server(const Options& options, int in_fd, int out_fd)
      : options_(options), in_(in_fd), out_(out_fd) {}

  int Run() {
    std::string buffer;
    char chunk[65536];
    bool eof = false;
    while (!eof) {
      pollfd p = {in_, POLLIN, 0};
      const int ready = poll(&p, 1, pending_.empty() ? -1 : options_.idle_ms);
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) {
        if (!Flush()) return 0;
        continue;
      }
      const ssize_t n = read(in_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        return 1;
      }
      if (n == 0) {
        eof = true;
        break;
      }
      buffer.append(chunk, static_cast<size_t>(n));
      size_t start = 0;
      for (size_t nl; (nl = buffer.find('\n', start)) != std::string::npos;
           start = nl + 1) {
        pending_.push_back(
            tokmarg::DecodeRequest(std::string_view(buffer).substr(start, nl - start)));
        if (static_cast<int>(pending_.size()) >= options_.reverse && !Flush()) {
          return 0;
        }
      }
      buffer.erase(0, start);
    }
    Flush();
    return 0;
  }

 private:
  // Returns false once the server should stop answering.
  bool Flush() {
    std::string out;
    bool go_on = true;
    for (auto it = pending_.rbegin(); it != pending_.rend(); ++it) {
      if (options_.stall_after > 0 && sent_ >= options_.stall_after) {
        // Swallow everything from here on.
        pending_.clear();
        WriteAll(out_, out);
        return true;
      }
      ++sent_;
      tokmarg::ScoreResponse r;
      r.id = it->id;
      for (const std::string& t : it->tokens) {
        r.logprobs.push_back(
            options_.zeros ? 0.0 : -(0.5 + 0.1 * static_cast<double>(t.size())));
      }
      if (sent_ == options_.wrong_length_at) r.logprobs.push_back(-1.0);
      if (sent_ == options_.malformed_at) {
        out += "this is not json\n";
      } else {
        out += tokmarg::EncodeResponse(r);
        out += '\n';
      }
      if (options_.crash_after > 0 && sent_ >= options_.crash_after) {
        go_on = false;
        break;
      }
    }
    pending_.clear();
    if (!WriteAll(out_, out)) return false;
    if (!go_on) std::_Exit(3);
    return true;
  }

  const Options& options_;
  int in_;
  int out_;
  std::vector<tokmarg::ScoreRequest> pending_;
  int64_t sent_ = 0;
};

int ServeTcp(const Options& options) {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return 1;
  const int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(options.listen_port));
  if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) return 1;
  if (listen(fd, 1) != 0) return 1;
  socklen_t len = sizeof(addr);
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  std::printf("%d\n", ntohs(addr.sin_port));
  std::fflush(stdout);
  const int conn = accept(fd, nullptr, nullptr);
  close(fd);
  if (conn < 0) return 1;
  Server server(options, conn, conn);
  const int rc = server.Run();
  close(conn);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  Options options;
  CLI::App app{"Line-protocol echo scorer for tests"};
  app.add_option("--reverse", options.reverse, "Answer groups of N in reverse order")
      ->check(CLI::PositiveNumber);
  app.add_option("--idle-ms", options.idle_ms, "Flush a partial group after idling");
  app.add_option("--malformed-at", options.malformed_at, "Corrupt response N");
  app.add_option("--wrong-length-at", options.wrong_length_at,
                 "Append a value to response N");
  app.add_option("--crash-after", options.crash_after, "Exit after N responses");
  app.add_option("--stall-after", options.stall_after, "Stop answering after N");
  app.add_flag("--zeros", options.zeros, "Score every token 0");
  app.add_option("--listen", options.listen_port,
                 "Serve one TCP connection on this port (0: any); prints the port");
  CLI11_PARSE(app, argc, argv);
  try {
    if (options.listen_port >= 0) return ServeTcp(options);
    Server server(options, STDIN_FILENO, STDOUT_FILENO);
    return server.Run();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "echo_scorer: %s\n", e.what());
    return 2;
  }
}
