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

#include "tokmarg/line_client.h"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "tokmarg/error.h"

namespace tokmarg {

namespace {

using nlohmann::json;

[[noreturn]] void ProtocolError(std::string_view line, const std::string& why) {
  constexpr size_t kMaxEcho = 200;
  std::string shown(line.substr(0, kMaxEcho));
  if (line.size() > kMaxEcho) shown += "...";
  throw Error(ErrorKind::kProtocolError, why + ": " + shown);
}

json ParseObject(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) ProtocolError(line, "not a JSON object");
  if (!j.contains("id") || !j["id"].is_number_integer()) {
    ProtocolError(line, "missing integer id");
  }
  return j;
}

void SetNonBlocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

std::string EncodeRequest(const ScoreRequest& request) {
  return json{{"id", request.id}, {"tokens", request.tokens}}.dump();
}

std::string EncodeResponse(const ScoreResponse& response) {
  return json{{"id", response.id}, {"logprobs", response.logprobs}}.dump();
}

ScoreRequest DecodeRequest(std::string_view line) {
  const json j = ParseObject(line);
  if (!j.contains("tokens") || !j["tokens"].is_array()) {
    ProtocolError(line, "missing tokens array");
  }
  ScoreRequest request;
  request.id = j["id"].get<int64_t>();
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) ProtocolError(line, "token is not a string");
    request.tokens.push_back(t.get<std::string>());
  }
  return request;
}

ScoreResponse DecodeResponse(std::string_view line) {
  const json j = ParseObject(line);
  if (!j.contains("logprobs") || !j["logprobs"].is_array()) {
    ProtocolError(line, "missing logprobs array");
  }
  ScoreResponse response;
  response.id = j["id"].get<int64_t>();
  for (const auto& v : j["logprobs"]) {
    if (!v.is_number()) ProtocolError(line, "logprob is not a number");
    const double x = v.get<double>();
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
      ProtocolError(line, "logprob is not a log-probability");
    }
    response.logprobs.push_back(x);
  }
  return response;
}

std::unique_ptr<LineTransport> LineTransport::SpawnProcess(
    const std::string& command) {
  signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0) throw Error(ErrorKind::kIo, "pipe failed");
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw Error(ErrorKind::kIo, "pipe failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorKind::kIo, "fork failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  SetNonBlocking(to_child[1]);
  SetNonBlocking(from_child[0]);
  return std::unique_ptr<LineTransport>(
      new LineTransport(from_child[0], to_child[1], pid, false));
}

std::unique_ptr<LineTransport> LineTransport::ConnectTcp(const std::string& host,
                                                         int port) {
  signal(SIGPIPE, SIG_IGN);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (getaddrinfo(host.c_str(), service.c_str(), &hints, &found) != 0) {
    throw Error(ErrorKind::kIo, "cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    fd = socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    close(fd);
    fd = -1;
  }
  freeaddrinfo(found);
  if (fd < 0) {
    throw Error(ErrorKind::kIo, "cannot connect to " + host + ":" + service);
  }
  SetNonBlocking(fd);
  return std::unique_ptr<LineTransport>(new LineTransport(fd, fd, -1, true));
}

std::unique_ptr<LineTransport> LineTransport::FromSpec(const std::string& spec) {
  if (spec.rfind("exec:", 0) == 0) return SpawnProcess(spec.substr(5));
  if (spec.rfind("tcp:", 0) == 0) {
    const std::string address = spec.substr(4);
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "expected tcp:<host>:<port>");
    }
    return ConnectTcp(address.substr(0, colon), std::stoi(address.substr(colon + 1)));
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown scorer transport " + spec);
}

LineTransport::~LineTransport() {
  if (socket_) {
    close(read_fd_);
    return;
  }
  close(write_fd_);
  close(read_fd_);
  if (pid_ > 0) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      if (waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
}

ExternalScorer::ExternalScorer(std::unique_ptr<LineTransport> transport,
                               ClientOptions options)
    : transport_(std::move(transport)), options_(options) {
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

std::vector<ScoreResponse> ExternalScorer::RoundTrip(
    std::span<const ScoreRequest> requests) {
  if (broken_) {
    throw Error(ErrorKind::kProtocolError, "client unusable after an earlier error");
  }
  struct Broken {
    bool* flag;
    bool armed = true;
    ~Broken() {
      if (armed) *flag = true;
    }
  } guard{&broken_};

  std::unordered_map<int64_t, size_t> outstanding;
  std::unordered_map<int64_t, size_t> index_of;
  for (size_t i = 0; i < requests.size(); ++i) {
    if (!index_of.emplace(requests[i].id, i).second) {
      throw Error(ErrorKind::kInvalidArgument,
                  "duplicate request id " + std::to_string(requests[i].id));
    }
  }
  std::vector<ScoreResponse> responses(requests.size());
  size_t next_to_send = 0;
  size_t received = 0;
  std::string out_buffer;
  size_t out_offset = 0;
  const int rfd = transport_->read_fd();
  const int wfd = transport_->write_fd();

  auto handle_line = [&](std::string_view line) {
    if (line.empty()) return;
    ScoreResponse r = DecodeResponse(line);
    const auto it = outstanding.find(r.id);
    if (it == outstanding.end()) {
      ProtocolError(line, "unexpected response id");
    }
    const size_t index = it->second;
    if (r.logprobs.size() != requests[index].tokens.size()) {
      ProtocolError(line, "expected " + std::to_string(requests[index].tokens.size()) +
                              " logprobs");
    }
    outstanding.erase(it);
    responses[index] = std::move(r);
    ++received;
  };

  while (received < requests.size()) {
    // Queue the next request line when there is room in the window.
    if (out_offset == out_buffer.size() && next_to_send < requests.size() &&
        outstanding.size() < options_.max_in_flight) {
      out_buffer = EncodeRequest(requests[next_to_send]);
      out_buffer.push_back('\n');
      out_offset = 0;
      outstanding.emplace(requests[next_to_send].id, next_to_send);
      peak_in_flight_ = std::max(peak_in_flight_, outstanding.size());
      ++next_to_send;
    }
    const bool want_write = out_offset < out_buffer.size();

    pollfd fds[2];
    nfds_t count = 0;
    fds[count++] = {rfd, POLLIN, 0};
    if (want_write && wfd != rfd) {
      fds[count++] = {wfd, POLLOUT, 0};
    } else if (want_write) {
      fds[0].events |= POLLOUT;
    }
    const int ready = poll(fds, count, static_cast<int>(options_.timeout.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kIo, std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) {
      throw Error(ErrorKind::kTimeout,
                  std::to_string(outstanding.size()) + " request(s) outstanding");
    }

    const short write_events = (wfd == rfd) ? fds[0].revents : (count > 1 ? fds[1].revents : 0);
    if (want_write && (write_events & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t n;
      if (transport_->is_socket()) {
        n = send(wfd, out_buffer.data() + out_offset, out_buffer.size() - out_offset,
                 MSG_NOSIGNAL);
      } else {
        n = write(wfd, out_buffer.data() + out_offset, out_buffer.size() - out_offset);
      }
      if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
        throw Error(ErrorKind::kScorerCrashed,
                    std::string("write failed: ") + std::strerror(errno));
      }
      if (n > 0) out_offset += static_cast<size_t>(n);
    }

    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char chunk[65536];
      const ssize_t n = read(rfd, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
        throw Error(ErrorKind::kScorerCrashed,
                    std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        throw Error(ErrorKind::kScorerCrashed,
                    "stream closed with " +
                        std::to_string(requests.size() - received) +
                        " response(s) missing");
      }
      pending_input_.append(chunk, static_cast<size_t>(n));
      size_t start = 0;
      for (size_t nl; (nl = pending_input_.find('\n', start)) != std::string::npos;
           start = nl + 1) {
        handle_line(std::string_view(pending_input_).substr(start, nl - start));
      }
      pending_input_.erase(0, start);
    }
  }
  guard.armed = false;
  return responses;
}

std::vector<TokenScores> ExternalScorer::ScoreBatch(
    std::span<const std::vector<std::string>> batch) {
  std::vector<ScoreRequest> requests;
  requests.reserve(batch.size());
  for (const auto& tokens : batch) {
    ScoreRequest r;
    r.id = next_id_++;
    r.tokens = tokens;
    r.tokens.emplace_back(kEosToken);
    requests.push_back(std::move(r));
  }
  std::vector<ScoreResponse> responses = RoundTrip(requests);
  std::vector<TokenScores> out;
  out.reserve(responses.size());
  for (auto& r : responses) {
    TokenScores s;
    s.eos_logprob = r.logprobs.back();
    r.logprobs.pop_back();
    s.logprobs = std::move(r.logprobs);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tokmarg
