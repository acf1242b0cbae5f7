#ifndef APPS_DEMO_HPP
#define APPS_DEMO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace apps {

/// Every place greets into one distributed map under its own name; a "main"
/// marker entry then relocates from place 0 to place 1. The smallest
/// end-to-end exercise of tasks, handles and keyed relocation.
struct HelloResult {
  std::vector<std::string> csvRows;  // place,key,value
  std::map<unsigned, std::map<std::string, std::string>> contents;
};

std::string helloCsvHeader();
HelloResult helloInWorld();
HelloResult helloRun(unsigned places, unsigned workers = 2);

/// Three collections rotate their payload one place to the right under a
/// single synchronization: a bag moves 20 of its 50 entries, a chunked list
/// moves its whole range, an id-keyed map moves all 10 keys. Checks that
/// relocation conserves the global contents.
struct RotateResult {
  std::vector<std::string> csvRows;  // place,bag_size,ranges,keys
  bool conserved = false;
  std::vector<std::int64_t> bagSizes;
  std::vector<std::string> rangesPerPlace;  // "from-to" joined by ';'
  std::vector<std::string> keysPerPlace;    // joined by ';'
};

std::string rotateCsvHeader();
RotateResult rotateInWorld();
RotateResult rotateRun(unsigned places, unsigned workers = 2);

}  // namespace apps

#endif  // APPS_DEMO_HPP
