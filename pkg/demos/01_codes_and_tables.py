"""Walk through the color code, its lookup tables and one decoded error."""

from steaneqec.codes import build_lookup_table, flag_lookup_table, make_code, render_table, syndrome_of
from steaneqec.pauli import PauliString

code = make_code("color")
print(code.n, "qubits,", len(code.z_generators), "Z checks,", len(code.x_generators), "X checks")
for g in code.z_generators:
    print("  Z check:", g)

table = build_lookup_table(code, "Z")
print(render_table(table))

# a single X error is identified from its Z syndrome
err = PauliString.parse("X5", 7)
syn = syndrome_of(code, err, "Z")
print(f"\n{err} -> syndrome {syn} -> recovery {table[syn]}")

# hook errors from a faulty stabilizer readout look like single-qubit errors
hook = flag_lookup_table(code, "Z")
for syn_text, rec in hook.rows():
    err = PauliString.parse(rec, 7)
    s = syndrome_of(code, err, "Z")
    print(f"{err} has syndrome {s}, same as {table[s]}; a fired flag picks {rec} instead")
