#include "servokit/cli.hpp"

int main(int argc, char** argv) { return servokit::cli::run(argc, argv); }
