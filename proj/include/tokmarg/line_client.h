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

#ifndef TOKMARG_LINE_CLIENT_H_
#define TOKMARG_LINE_CLIENT_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokmarg/scorer.h"

namespace tokmarg {

// Wire format, one JSON object per line, UTF-8, log-probabilities in nats:
//   request  {"id": int, "tokens": [string, ...]}
//   response {"id": int, "logprobs": [float, ...]}
struct ScoreRequest {
  int64_t id = 0;
  std::vector<std::string> tokens;
};

struct ScoreResponse {
  int64_t id = 0;
  std::vector<double> logprobs;
};

std::string EncodeRequest(const ScoreRequest& request);
std::string EncodeResponse(const ScoreResponse& response);
// Both throw kProtocolError (with the offending line) on malformed input.
ScoreRequest DecodeRequest(std::string_view line);
ScoreResponse DecodeResponse(std::string_view line);

// A bidirectional byte stream to a scorer: a child process's stdin/stdout or
// a connected TCP socket.
class LineTransport {
 public:
  // Runs `command` through /bin/sh -c.
  static std::unique_ptr<LineTransport> SpawnProcess(const std::string& command);
  static std::unique_ptr<LineTransport> ConnectTcp(const std::string& host,
                                                   int port);
  // Parses "exec:<command>" or "tcp:<host>:<port>".
  static std::unique_ptr<LineTransport> FromSpec(const std::string& spec);

  ~LineTransport();
  LineTransport(const LineTransport&) = delete;
  LineTransport& operator=(const LineTransport&) = delete;

  int read_fd() const { return read_fd_; }
  int write_fd() const { return write_fd_; }
  bool is_socket() const { return socket_; }

 private:
  LineTransport(int read_fd, int write_fd, int pid, bool socket)
      : read_fd_(read_fd), write_fd_(write_fd), pid_(pid), socket_(socket) {}

  int read_fd_;
  int write_fd_;
  int pid_;
  bool socket_;
};

struct ClientOptions {
  size_t max_in_flight = 64;
  std::chrono::milliseconds timeout{30000};
};

// Pipelined client for an external scorer. Up to max_in_flight requests are
// outstanding at once; responses may arrive in any order and are matched by
// id. Errors: kTimeout (no progress within the timeout), kProtocolError
// (malformed line, unknown or repeated id, wrong length), kScorerCrashed
// (stream closed with requests outstanding). After an error the client is
// unusable.
class ExternalScorer : public Scorer {
 public:
  ExternalScorer(std::unique_ptr<LineTransport> transport,
                 ClientOptions options = {});

  // Responses in request order. Request ids must be unique.
  std::vector<ScoreResponse> RoundTrip(std::span<const ScoreRequest> requests);

  // Sends each sequence with kEosToken appended; the last returned value is
  // the EOS log-probability.
  std::vector<TokenScores> ScoreBatch(
      std::span<const std::vector<std::string>> batch) override;

  // Largest number of unanswered requests seen so far.
  size_t peak_in_flight() const { return peak_in_flight_; }

 private:
  std::unique_ptr<LineTransport> transport_;
  ClientOptions options_;
  std::string pending_input_;
  int64_t next_id_ = 0;
  bool broken_ = false;
  size_t peak_in_flight_ = 0;
};

}  // namespace tokmarg

#endif  // TOKMARG_LINE_CLIENT_H_
