#pragma once

#include <string>
#include <vector>

#include "qmera/mera.hpp"

namespace qmera {

enum class OpKind { RZ, UXX, UYY, UZZ, H, CX, RESET, MEASZ };
enum class BitRole { cone_exit, site_z, xx_ancilla };

struct CircuitOp {
    OpKind kind;
    int q0 = -1;
    int q1 = -1;       // second qubit for two-qubit ops; CX: q0 = control, q1 = target
    double param = 0;  // rotation angle where applicable
    int cbit = -1;     // classical bit index for MEASZ

    bool is_two_qubit() const {
        return kind == OpKind::UXX || kind == OpKind::UYY || kind == OpKind::UZZ ||
               kind == OpKind::CX;
    }
};

struct ClassicalBit {
    BitRole role;
};

/// Flat gate-level IR. Immutable by convention: transforms return new circuits.
struct Circuit {
    int num_qubits = 0;
    std::vector<CircuitOp> ops;
    std::vector<ClassicalBit> cbits;

    void check() const;  // throws on malformed ops (bad qubits, use-after-measure)
    int two_qubit_gates() const;
};

/// Cone lowered to a circuit: one wire per cone qubit, no reuse.
/// Every wire that exits the cone ends in a MEASZ tagged cone_exit; the cone's
/// output sites are left unmeasured (see attach_gadget).
struct LoweredCone {
    Circuit circuit;
    std::vector<int> wire_of_qubit;  // circuit qubit -> network wire (== site id)
    std::vector<int> output_qubits;  // circuit qubits carrying cone.sites, same order
};

LoweredCone lower(const MeraNetwork& net, const CausalCone& cone);

/// Whole-network state-preparation circuit on all L sites: qubit index equals
/// wire (site) index, unitary ops only, nothing measured.
Circuit lower_full(const MeraNetwork& net);

/// Ancilla-assisted X_j X_k parity measurement plus Z-basis readout of j and k:
/// ancilla |0>, H, CX(anc->j), CX(anc->k), H, MEASZ(anc: xx_ancilla),
/// MEASZ(j: site_z), MEASZ(k: site_z). Ancilla outcome b gives eigenvalue (-1)^b.
Circuit attach_gadget(const Circuit& c, int qj, int qk);

/// Noise-amplification transform: every two-qubit entangler U becomes the m-fold
/// sequence U · [P1 U P1 · U]^((m-1)/2) with same-sign angles, where P is the
/// single-qubit conjugation that flips the entangler's angle (Z for UXX/UYY,
/// X for UZZ); CX repeats m times. Unitary-preserving; 2q gate count scales by m.
Circuit fold_zne(const Circuit& c, int m);

// ---- serialization: JSON lines, one op per record ----
std::string circuit_to_jsonl(const Circuit& c);
Circuit circuit_from_jsonl(const std::string& text);
void save_circuit(const Circuit& c, const std::string& path);
Circuit load_circuit(const std::string& path);

const char* op_name(OpKind k);
const char* role_name(BitRole r);

}  // namespace qmera
