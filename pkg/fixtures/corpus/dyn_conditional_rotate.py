import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
needs_fix = True
if needs_fix:
    out = img.rotate(90, expand=True)
