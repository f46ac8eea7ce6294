import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
img2 = img.crop((5, 5, 55, 105))
print(img2.size)
