import numpy as np

def rule110_3(I):
    #I is a 3-cell grid, with cell 1 being the cell to update

	D1 = I[1] or I[2]

	D2 = (not I[0]) or (not I[1]) or (not I[2])

	S1 = (D1 and D2)

	S2 = (not D1)

	S3 = (not D2)

	C1 = (not S1) or (S2 and S3)

	C2 = (S1 and (not S3)) or (S1 and (not S2) and S3)

	return C1 and not C2
