#ifndef PANICLE_MC_TABLES_HPP
#define PANICLE_MC_TABLES_HPP

namespace panicle::mc {

extern const int kEdgeTable[256];
extern const int kTriTable[256][16];
extern const int kEdgeCorners[12][2];
extern const int kCornerOffset[8][3];

}  // namespace panicle::mc

#endif
