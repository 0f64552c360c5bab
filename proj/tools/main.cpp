#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "cli_app.hpp"

namespace {

extern "C" void on_signal(int) { facepref::cli::stop_flag()->store(1); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const std::vector<std::string> args(argv + 1, argv + argc);
  return facepref::cli::run_cli(args, std::cout, std::cerr);
}
