#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pipeline.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("echoscope"));
  spdlog::set_pattern("[%l] %v");
  return echoscope::cli::run(argc, argv, std::cout, std::cerr);
}
