#include "sglmm/cli.hpp"

int main(int argc, char** argv) {
  return sglmm::cli::run(std::vector<std::string>(argv, argv + argc));
}
