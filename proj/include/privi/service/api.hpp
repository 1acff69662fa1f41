#pragma once

#include <memory>
#include <string>

#include "privi/service/stages.hpp"

namespace privi::service {

// JSON/PNG HTTP API over a pipeline workspace. Reads run concurrently;
// stage runs, retraining and threshold changes go through one writer lock.
class ApiServer {
 public:
  explicit ApiServer(Pipeline& pipeline);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds to `port`, or to a free port when `port` is 0. Returns the bound
  // port; throws ContractError when binding fails.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace privi::service
