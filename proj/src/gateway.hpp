#pragma once

#include <memory>
#include <string>
#include <thread>

#include "runtime.hpp"

namespace stepguard {

// HTTP surface for web agents:
//   POST /sessions                 create a session
//   POST /sessions/{id}/steps      submit one reasoning step, get the verdict
//   POST /sessions/{id}/close      flush violations, get update outcomes
//   POST /policies/ingest          run the enhancement pipeline on a document
//   GET  /policies                 query structured policies
//   GET  /metrics                  report over recorded task outcomes
class Gateway {
public:
    explicit Gateway(Runtime& runtime);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    // Binds and serves on a background thread. port 0 picks a free port.
    void start(const std::string& host, int port);
    void start(); // uses the runtime config's listen_address
    void stop();
    int port() const { return port_; }

private:
    class Impl;
    Runtime& runtime_;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace stepguard
